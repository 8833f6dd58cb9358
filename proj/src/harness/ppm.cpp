#include "aifnav/harness/ppm.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace aifnav::harness {

void write_ppm(const Tensor& img, const std::string& path) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("write_ppm: expected a [3,H,W] tensor");
    const int H = img.dim(1), W = img.dim(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P6\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row(size_t(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = img[(int64_t(c) * H + y) * W + x];
                v = std::clamp(v, 0.0f, 1.0f);
                row[size_t(x) * 3 + c] = static_cast<unsigned char>(v * 255.0f + 0.5f);
            }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

Tensor contact_sheet(const std::vector<Tensor>& frames, int cols) {
    if (frames.empty()) throw std::invalid_argument("contact_sheet: no frames");
    if (cols < 1) throw std::invalid_argument("contact_sheet: cols must be >= 1");
    const int H = frames[0].dim(frames[0].rank() - 2);
    const int W = frames[0].dim(frames[0].rank() - 1);
    const int n = static_cast<int>(frames.size());
    const int rows = (n + cols - 1) / cols;
    Tensor sheet = Tensor::zeros({3, rows * H, cols * W});
    for (int i = 0; i < n; ++i) {
        const Tensor& f = frames[i];
        if (f.size() != int64_t(3) * H * W)
            throw std::invalid_argument("contact_sheet: mismatched frame sizes");
        const int r = i / cols, col = i % cols;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    sheet[(int64_t(c) * rows * H + r * H + y) * int64_t(cols) * W + col * W + x] =
                        f[(int64_t(c) * H + y) * W + x];
    }
    return sheet;
}

}  // namespace aifnav::harness
