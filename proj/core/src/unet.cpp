#include "gated/unet.hpp"

namespace gated {

// ----------------------------------------------------------- DoubleConv ----

template <typename T>
DoubleConvT<T>::DoubleConvT(int in_c, int out_c, Rng& rng)
    : conv1_(in_c, out_c, 3, 1, 1, true, rng),
      conv2_(out_c, out_c, 3, 1, 1, true, rng),
      bn1_(out_c),
      bn2_(out_c) {}

template <typename T>
TensorT<T> DoubleConvT<T>::forward(const TensorT<T>& x) {
  TensorT<T> h = relu1_.forward(bn1_.forward(conv1_.forward(x)));
  return relu2_.forward(bn2_.forward(conv2_.forward(h)));
}

template <typename T>
TensorT<T> DoubleConvT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> g = conv2_.backward(bn2_.backward(relu2_.backward(gy)));
  return conv1_.backward(bn1_.backward(relu1_.backward(g)));
}

template <typename T>
void DoubleConvT<T>::set_train(bool train) {
  bn1_.set_train(train);
  bn2_.set_train(train);
}

template <typename T>
void DoubleConvT<T>::zero_grad() {
  conv1_.zero_grad();
  conv2_.zero_grad();
  bn1_.zero_grad();
  bn2_.zero_grad();
}

template <typename T>
void DoubleConvT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  conv1_.collect_state(prefix + ".conv1", out);
  bn1_.collect_state(prefix + ".bn1", out);
  conv2_.collect_state(prefix + ".conv2", out);
  bn2_.collect_state(prefix + ".bn2", out);
}

// ------------------------------------------------------------ RefineUnet ---

template <typename T>
RefineUnetT<T>::RefineUnetT(Rng& rng)
    : stem_(3, 64, rng),
      enc1_(64, 128, rng),
      enc2_(128, 256, rng),
      enc3_(256, 512, rng),
      enc4_(512, 1024, rng),
      dec1_(1024, rng),
      dec2_(512, rng),
      dec3_(256, rng),
      dec4_(128, rng),
      head_(64, 3, 1, 1, 0, true, rng) {}

template <typename T>
TensorT<T> RefineUnetT<T>::forward(const TensorT<T>& x, int zero_skip) {
  if (x.c() != 3) throw ShapeError("refine: expected 3-channel input, got " + x.shape_str());
  if (x.h() % 16 != 0 || x.w() % 16 != 0)
    throw ShapeError("refine: spatial dims must be divisible by 16, got " + x.shape_str());

  skips_.clear();
  skips_.push_back(stem_.forward(x));
  EncStageT<T>* encs[] = {&enc1_, &enc2_, &enc3_, &enc4_};
  for (int i = 0; i < 4; ++i) {
    TensorT<T> h = encs[i]->dc.forward(encs[i]->cbam.forward(encs[i]->pool.forward(skips_.back())));
    if (i < 3)
      skips_.push_back(std::move(h));
    else
      bottleneck_ = std::move(h);
  }

  DecStageT<T>* decs[] = {&dec1_, &dec2_, &dec3_, &dec4_};
  TensorT<T> u = bottleneck_;
  for (int i = 0; i < 4; ++i) {
    const int skip_idx = 3 - i;
    TensorT<T> up = decs[i]->up.forward(u);
    const TensorT<T>& skip = skips_[skip_idx];
    TensorT<T> cat;
    if (skip_idx == zero_skip) {
      TensorT<T> zero(skip.n(), skip.c(), skip.h(), skip.w());
      cat = concat_channels(up, zero);
    } else {
      cat = concat_channels(up, skip);
    }
    u = decs[i]->dc.forward(decs[i]->cbam.forward(cat));
  }
  return head_sig_.forward(head_.forward(u));
}

template <typename T>
TensorT<T> RefineUnetT<T>::backward(const TensorT<T>& gy) {
  TensorT<T> g = head_.backward(head_sig_.backward(gy));

  // Decoder pass (reverse order), collecting skip gradients.
  DecStageT<T>* decs[] = {&dec4_, &dec3_, &dec2_, &dec1_};
  std::vector<TensorT<T>> gskips(4);
  for (int i = 0; i < 4; ++i) {
    const int skip_idx = i;  // dec4 consumed skip 0, dec1 consumed skip 3
    TensorT<T> gcat = decs[i]->cbam.backward(decs[i]->dc.backward(g));
    const TensorT<T>& skip = skips_[skip_idx];
    TensorT<T> gup(skip.n(), gcat.c() - skip.c(), skip.h(), skip.w());
    gskips[skip_idx] = TensorT<T>(skip.n(), skip.c(), skip.h(), skip.w());
    split_channels(gcat, gup, gskips[skip_idx]);
    g = decs[i]->up.backward(gup);
  }

  // Encoder pass: g currently holds the bottleneck gradient.
  EncStageT<T>* encs[] = {&enc4_, &enc3_, &enc2_, &enc1_};
  for (int i = 0; i < 4; ++i) {
    TensorT<T> gin = encs[i]->pool.backward(
        encs[i]->cbam.backward(encs[i]->dc.backward(g)));
    const int skip_idx = 3 - i;
    g = std::move(gskips[skip_idx]);
    for (size_t j = 0; j < g.numel(); ++j) g[j] += gin[j];
  }
  return stem_.backward(g);
}

template <typename T>
void RefineUnetT<T>::set_train(bool train) {
  stem_.set_train(train);
  EncStageT<T>* encs[] = {&enc1_, &enc2_, &enc3_, &enc4_};
  for (auto* e : encs) e->dc.set_train(train);
  DecStageT<T>* decs[] = {&dec1_, &dec2_, &dec3_, &dec4_};
  for (auto* d : decs) d->dc.set_train(train);
}

template <typename T>
void RefineUnetT<T>::zero_grad() {
  stem_.zero_grad();
  EncStageT<T>* encs[] = {&enc1_, &enc2_, &enc3_, &enc4_};
  for (auto* e : encs) {
    e->cbam.zero_grad();
    e->dc.zero_grad();
  }
  DecStageT<T>* decs[] = {&dec1_, &dec2_, &dec3_, &dec4_};
  for (auto* d : decs) {
    d->up.zero_grad();
    d->cbam.zero_grad();
    d->dc.zero_grad();
  }
  head_.zero_grad();
}

template <typename T>
void RefineUnetT<T>::collect_state(const std::string& prefix, ParamListT<T>& out) {
  stem_.collect_state(prefix + ".stem", out);
  EncStageT<T>* encs[] = {&enc1_, &enc2_, &enc3_, &enc4_};
  for (int i = 0; i < 4; ++i) {
    const std::string p = prefix + ".enc" + std::to_string(i + 1);
    encs[i]->cbam.collect_state(p + ".cbam", out);
    encs[i]->dc.collect_state(p + ".dc", out);
  }
  DecStageT<T>* decs[] = {&dec1_, &dec2_, &dec3_, &dec4_};
  for (int i = 0; i < 4; ++i) {
    const std::string p = prefix + ".dec" + std::to_string(i + 1);
    decs[i]->up.collect_state(p + ".up", out);
    decs[i]->cbam.collect_state(p + ".cbam", out);
    decs[i]->dc.collect_state(p + ".dc", out);
  }
  head_.collect_state(prefix + ".head", out);
}

// ------------------------------------------------------------ GatedModel ---

template <typename T>
GatedModelT<T>::GatedModelT(uint64_t seed) : rng_(seed), agcm_(rng_), unet_(rng_) {}

template <typename T>
GatedOutT<T> GatedModelT<T>::forward(const TensorT<T>& img) {
  AgcmOutT<T> s1 = agcm_.forward(img);
  GatedOutT<T> out;
  out.final = unet_.forward(s1.image);
  out.stage1 = std::move(s1.image);
  out.gamma = std::move(s1.gamma);
  return out;
}

template <typename T>
void GatedModelT<T>::backward(const TensorT<T>& g_final, const TensorT<T>& g_stage1,
                              const TensorT<T>& g_gamma) {
  TensorT<T> g_s1;
  if (!g_final.empty()) g_s1 = unet_.backward(g_final);
  if (!g_stage1.empty()) {
    if (g_s1.empty()) {
      g_s1 = g_stage1;
    } else {
      for (size_t i = 0; i < g_s1.numel(); ++i) g_s1[i] += g_stage1[i];
    }
  }
  agcm_.backward(g_s1, g_gamma);
}

template <typename T>
void GatedModelT<T>::set_train(bool train) {
  agcm_.set_train(train);
  unet_.set_train(train);
}

template <typename T>
void GatedModelT<T>::zero_grad() {
  agcm_.zero_grad();
  unet_.zero_grad();
}

template <typename T>
ParamListT<T> GatedModelT<T>::state() {
  ParamListT<T> out;
  agcm_.collect_state("agcm", out);
  unet_.collect_state("unet", out);
  return out;
}

template <typename T>
size_t GatedModelT<T>::param_count() {
  size_t n = 0;
  for (const auto& p : state())
    if (p.trainable) n += p.value->numel();
  return n;
}

template class DoubleConvT<float>;
template class DoubleConvT<double>;
template class RefineUnetT<float>;
template class RefineUnetT<double>;
template class GatedModelT<float>;
template class GatedModelT<double>;

}  // namespace gated
