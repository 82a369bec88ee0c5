#include "gated/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <opencv2/imgcodecs.hpp>

#include "gated/errors.hpp"
#include "gated/layers.hpp"

namespace gated {

namespace {
bool known_raster_ext(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  for (const char* e : {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm"})
    if (ext == e) return true;
  return false;
}
}  // namespace

Tensor load_image(const std::string& path, bool replicate_gray) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) {
    if (known_raster_ext(path)) throw DecodeError("failed to decode " + path);
    throw UnsupportedFormat("not a supported raster format: " + path);
  }
  if (m.depth() != CV_8U && m.depth() != CV_16U)
    throw UnsupportedFormat("unsupported bit depth in " + path);

  const int ch = m.channels();
  if (ch == 1 && !replicate_gray)
    throw GrayscaleInput("grayscale input (enable channel replication to accept): " + path);
  if (ch != 1 && ch != 3 && ch != 4)
    throw UnsupportedFormat("unsupported channel count " + std::to_string(ch) + " in " + path);

  const int h = m.rows, w = m.cols;
  const float scale = m.depth() == CV_8U ? 1.0f / 255.0f : 1.0f / 65535.0f;
  Tensor out(1, 3, h, w);
  // OpenCV stores BGR(A); emit RGB planes.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float r, g, b;
      if (m.depth() == CV_8U) {
        const uint8_t* p = m.ptr<uint8_t>(y) + static_cast<size_t>(x) * ch;
        if (ch == 1) {
          r = g = b = p[0] * scale;
        } else {
          b = p[0] * scale;
          g = p[1] * scale;
          r = p[2] * scale;
        }
      } else {
        const uint16_t* p = m.ptr<uint16_t>(y) + static_cast<size_t>(x) * ch;
        if (ch == 1) {
          r = g = b = p[0] * scale;
        } else {
          b = p[0] * scale;
          g = p[1] * scale;
          r = p[2] * scale;
        }
      }
      out.at(0, 0, y, x) = r;
      out.at(0, 1, y, x) = g;
      out.at(0, 2, y, x) = b;
    }
  return out;
}

void save_image(const Tensor& img, const std::string& path) {
  if (img.n() != 1 || img.c() != 3)
    throw ShapeError("save_image expects (1, 3, H, W), got " + img.shape_str());
  const int h = img.h(), w = img.w();
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        // BGR order; round half up via lround, then clamp.
        const float v = img.at(0, 2 - c, y, x);
        long q = std::lround(static_cast<double>(v) * 255.0);
        row[static_cast<size_t>(x) * 3 + c] = static_cast<uint8_t>(std::clamp(q, 0L, 255L));
      }
    }
  }
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path, m);
  } catch (const cv::Exception& e) {
    throw IoError("failed to write " + path + ": " + e.what());
  }
  if (!ok) throw IoError("failed to write " + path);
}

Tensor resize_bilinear(const Tensor& img, int oh, int ow) {
  if (oh < 1 || ow < 1) throw ShapeError("resize target must be >= 1x1");
  const int n = img.n(), c = img.c(), h = img.h(), w = img.w();
  if (oh == h && ow == w) return img;
  Tensor out(n, c, oh, ow);
  const double sy = static_cast<double>(h) / oh;
  const double sx = static_cast<double>(w) / ow;
  for (int in = 0; in < n; ++in)
    for (int ic = 0; ic < c; ++ic) {
      const float* src = img.plane(in, ic);
      float* dst = out.plane(in, ic);
      for (int y = 0; y < oh; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int iy = static_cast<int>(std::floor(fy));
        const double wy = fy - iy;
        const int y0 = std::clamp(iy, 0, h - 1);
        const int y1 = std::clamp(iy + 1, 0, h - 1);
        for (int x = 0; x < ow; ++x) {
          const double fx = (x + 0.5) * sx - 0.5;
          const int ix = static_cast<int>(std::floor(fx));
          const double wx = fx - ix;
          const int x0 = std::clamp(ix, 0, w - 1);
          const int x1 = std::clamp(ix + 1, 0, w - 1);
          const double top = src[y0 * w + x0] * (1 - wx) + src[y0 * w + x1] * wx;
          const double bot = src[y1 * w + x0] * (1 - wx) + src[y1 * w + x1] * wx;
          dst[static_cast<size_t>(y) * ow + x] = static_cast<float>(top * (1 - wy) + bot * wy);
        }
      }
    }
  return out;
}

Tensor pad_to_multiple_reflect(const Tensor& img, int multiple) {
  const int h = img.h(), w = img.w();
  const int ph = (multiple - h % multiple) % multiple;
  const int pw = (multiple - w % multiple) % multiple;
  if (ph == 0 && pw == 0) return img;
  return reflect_pad(img, 0, ph, 0, pw);
}

Tensor crop_top_left(const Tensor& img, int h, int w) {
  if (h > img.h() || w > img.w()) throw ShapeError("crop larger than image");
  if (h == img.h() && w == img.w()) return img;
  Tensor out(img.n(), img.c(), h, w);
  for (int in = 0; in < img.n(); ++in)
    for (int ic = 0; ic < img.c(); ++ic) {
      const float* src = img.plane(in, ic);
      float* dst = out.plane(in, ic);
      for (int y = 0; y < h; ++y)
        std::copy(src + static_cast<size_t>(y) * img.w(), src + static_cast<size_t>(y) * img.w() + w,
                  dst + static_cast<size_t>(y) * w);
    }
  return out;
}

}  // namespace gated
