#pragma once

#include <string>

#include "gated/tensor.hpp"

namespace gated {

// Loads an 8/16-bit raster file as a (1, 3, H, W) float tensor in [0,1],
// RGB channel order, scaled by the max code value. Grayscale inputs throw
// GrayscaleInput unless replicate_gray is set, in which case the single
// channel is copied to all three.
Tensor load_image(const std::string& path, bool replicate_gray = false);

// Writes a (1, 3, H, W) [0,1] tensor as an 8-bit PNG. Quantization is
// round(v * 255), round-half-up, clamped to [0, 255].
void save_image(const Tensor& img, const std::string& path);

// Bilinear resize without corner alignment (half-pixel centers); works on
// any (N, C, H, W) tensor.
Tensor resize_bilinear(const Tensor& img, int oh, int ow);

// Reflection-pads bottom/right so H and W become multiples of `multiple`.
Tensor pad_to_multiple_reflect(const Tensor& img, int multiple);

// Top-left crop to (h, w).
Tensor crop_top_left(const Tensor& img, int h, int w);

}  // namespace gated
