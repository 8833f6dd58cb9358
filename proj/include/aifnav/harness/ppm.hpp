#pragma once

#include <string>
#include <vector>

#include "aifnav/diffcore/tensor.hpp"

namespace aifnav::harness {

// Writes a [3,H,W] tensor with values in [0,1] as binary PPM (P6).
void write_ppm(const Tensor& img, const std::string& path);

// Tiles [3,H,W] frames into one [3, rows*H, cols*W] sheet (row-major, black
// padding for the remainder).
Tensor contact_sheet(const std::vector<Tensor>& frames, int cols);

}  // namespace aifnav::harness
