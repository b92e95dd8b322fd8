#pragma once

#include <string>

#include "forbes/image.hpp"

namespace forbes {

// Binary P6 PPM with maxval 255. Loading maps bytes to v/255 exactly and
// rejects rasters smaller than 8x8; saving clamps to [0, 1] and rounds
// half away from zero, emitting the canonical header "P6\n<W> <H>\n255\n".
Image load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Image& img);

}  // namespace forbes
