#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace skeltop {

/// Weights laid out (c_out, c_in, k_h, k_w), row-major.
struct Kernel2D {
    std::size_t c_out = 1, c_in = 1, k_h = 1, k_w = 1;
    std::vector<double> weights;

    double at(std::size_t o, std::size_t i, std::size_t y, std::size_t x) const {
        return weights[((o * c_in + i) * k_h + y) * k_w + x];
    }
    void validate() const;
};

/// Weights laid out (c_out, c_in, k_d, k_h, k_w), row-major.
struct Kernel3D {
    std::size_t c_out = 1, c_in = 1, k_d = 1, k_h = 1, k_w = 1;
    std::vector<double> weights;

    std::size_t offset(std::size_t o, std::size_t i, std::size_t z, std::size_t y,
                       std::size_t x) const {
        return (((o * c_in + i) * k_d + z) * k_h + y) * k_w + x;
    }
    double at(std::size_t o, std::size_t i, std::size_t z, std::size_t y, std::size_t x) const {
        return weights[offset(o, i, z, y, x)];
    }
    void validate() const;
};

/// Multi-channel image, (channels, height, width).
struct Field2D {
    std::size_t channels = 1, height = 0, width = 0;
    std::vector<double> data;

    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * height + y) * width + x];
    }
};

/// Multi-channel volume, (channels, depth, height, width).
struct Field3D {
    std::size_t channels = 1, depth = 0, height = 0, width = 0;
    std::vector<double> data;

    double at(std::size_t c, std::size_t z, std::size_t y, std::size_t x) const {
        return data[((c * depth + z) * height + y) * width + x];
    }
};

/// The 2D kernel at depth slice floor(k_d/2), zeros elsewhere.
Kernel3D inflate_center(const Kernel2D& k, std::size_t k_d);

/// Every depth slice equals k / k_d.
Kernel3D inflate_average(const Kernel2D& k, std::size_t k_d);

/// Sum over the depth axis; recovers the source 2D kernel of either inflation.
Kernel2D depth_sum(const Kernel3D& k);

struct Stride3 {
    std::size_t d = 1, h = 1, w = 1;
};

/// Direct cross-correlation with floor(k/2) zero padding on each spatial axis.
/// Output extent per axis: (n + 2*floor(k/2) - k) / stride + 1.
Field2D conv2d(const Field2D& img, const Kernel2D& k, std::size_t stride = 1);
Field3D conv3d(const Field3D& vol, const Kernel3D& k, Stride3 stride = {});

/// All channels at depth t.
Field2D depth_slice(const Field3D& vol, std::size_t t);

/// A depth-constant volume: `slice` repeated `depth` times.
Field3D repeat_along_depth(const Field2D& slice, std::size_t depth);

/// Max-abs residuals of the inflation equivalence checks on one volume.
struct InflationResiduals {
    double center_slice = 0.0;                   // conv3d(center) vs per-slice conv2d, all depths
    std::optional<double> average_interior;      // depth-constant input, interior depths only
    double center_mass = 0.0;                    // depth_sum(center) vs k
    double average_mass = 0.0;                   // depth_sum(average) vs k
};

/// k_d must be odd.
InflationResiduals verify_inflation(const Kernel2D& k, std::size_t k_d, const Field3D& vol);

/// Tensor file: JSON sidecar {"shape":[...], "dtype":"f32", "data_file":"..."}
/// and a little-endian row-major payload.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

Kernel2D kernel2d_from_tensor(const Tensor& t);
Tensor to_tensor(const Kernel3D& k);
Tensor to_tensor(const Kernel2D& k);

/// Shape [c, d, h, w] or [d, h, w] (one channel).
Field3D field3d_from_tensor(const Tensor& t);

}  // namespace skeltop
