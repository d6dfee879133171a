#include "skeltop/volume.hpp"

#include <algorithm>
#include <cmath>

#include "skeltop/error.hpp"

namespace skeltop {

std::string Dims::to_string() const {
    return std::to_string(depth) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

const char* to_string(VolumeKind kind) noexcept {
    return kind == VolumeKind::Binary ? "binary" : "probability";
}

double squared_distance(const VoxelCoord& a, const VoxelCoord& b) noexcept {
    const double dz = a.z - b.z;
    const double dy = a.y - b.y;
    const double dx = a.x - b.x;
    return dz * dz + dy * dy + dx * dx;
}

double distance(const VoxelCoord& a, const VoxelCoord& b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

Volume3D::Volume3D(Dims dims, VolumeKind kind, std::vector<float> data, Spacing spacing)
    : dims_(dims), spacing_(spacing), kind_(kind), data_(std::move(data)) {
    if (dims_.depth == 0 || dims_.height == 0 || dims_.width == 0) {
        throw InvalidParameter("volume dims must be positive, got " + dims_.to_string());
    }
    if (!(spacing_.z > 0 && spacing_.y > 0 && spacing_.x > 0)) {
        throw InvalidParameter("volume spacing must be positive");
    }
    if (data_.size() != dims_.voxel_count()) {
        throw DimensionMismatch("volume payload has " + std::to_string(data_.size()) +
                                " values, dims " + dims_.to_string() + " need " +
                                std::to_string(dims_.voxel_count()));
    }
    if (kind_ == VolumeKind::Binary) {
        auto bad = std::find_if(data_.begin(), data_.end(),
                                [](float v) { return v != 0.0f && v != 1.0f; });
        if (bad != data_.end()) {
            throw InvalidParameter("binary volume holds value " + std::to_string(*bad) +
                                   " at index " + std::to_string(bad - data_.begin()));
        }
    } else {
        auto bad = std::find_if(data_.begin(), data_.end(),
                                [](float v) { return !(v >= 0.0f && v <= 1.0f); });
        if (bad != data_.end()) {
            throw InvalidParameter("probability volume holds value outside [0,1] at index " +
                                   std::to_string(bad - data_.begin()));
        }
    }
}

Volume3D Volume3D::zeros(Dims dims, VolumeKind kind, Spacing spacing) {
    return Volume3D(dims, kind, std::vector<float>(dims.voxel_count(), 0.0f), spacing);
}

VoxelCoord Volume3D::coord(std::size_t flat) const noexcept {
    const std::size_t plane = dims_.height * dims_.width;
    const auto z = flat / plane;
    const auto rem = flat % plane;
    return {static_cast<int>(z), static_cast<int>(rem / dims_.width),
            static_cast<int>(rem % dims_.width)};
}

bool Volume3D::contains(int z, int y, int x) const noexcept {
    return z >= 0 && y >= 0 && x >= 0 && static_cast<std::size_t>(z) < dims_.depth &&
           static_cast<std::size_t>(y) < dims_.height && static_cast<std::size_t>(x) < dims_.width;
}

std::size_t Volume3D::foreground_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(data_.begin(), data_.end(), [](float v) { return v > 0.0f; }));
}

std::vector<VoxelCoord> Volume3D::foreground() const {
    std::vector<VoxelCoord> out;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (data_[i] > 0.0f) out.push_back(coord(i));
    }
    return out;
}

Volume3D mask_from_coords(Dims dims, std::span<const VoxelCoord> coords, Spacing spacing) {
    auto vol = Volume3D::zeros(dims, VolumeKind::Binary, spacing);
    std::vector<float> data(vol.data().begin(), vol.data().end());
    for (const auto& c : coords) {
        if (!vol.contains(c)) {
            throw InvalidParameter("coordinate (" + std::to_string(c.z) + "," +
                                   std::to_string(c.y) + "," + std::to_string(c.x) +
                                   ") outside " + dims.to_string());
        }
        data[vol.index(c)] = 1.0f;
    }
    return Volume3D(dims, VolumeKind::Binary, std::move(data), spacing);
}

Volume3D as_probability(const Volume3D& vol) {
    return Volume3D(vol.dims(), VolumeKind::Probability,
                    std::vector<float>(vol.data().begin(), vol.data().end()), vol.spacing());
}

Volume3D threshold(const Volume3D& prob, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidParameter("threshold tau must lie in (0,1), got " + std::to_string(tau));
    }
    std::vector<float> out(prob.size());
    std::transform(prob.data().begin(), prob.data().end(), out.begin(),
                   [tau](float v) { return static_cast<double>(v) > tau ? 1.0f : 0.0f; });
    return Volume3D(prob.dims(), VolumeKind::Binary, std::move(out), prob.spacing());
}

std::vector<VoxelCoord> surface_voxels(const Volume3D& mask) {
    static constexpr int kFace[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                        {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    std::vector<VoxelCoord> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.data()[i] <= 0.0f) continue;
        const auto c = mask.coord(i);
        for (const auto& f : kFace) {
            const int z = c.z + f[0], y = c.y + f[1], x = c.x + f[2];
            if (!mask.contains(z, y, x) || mask.at(static_cast<std::size_t>(z),
                                                   static_cast<std::size_t>(y),
                                                   static_cast<std::size_t>(x)) <= 0.0f) {
                out.push_back(c);
                break;
            }
        }
    }
    return out;
}

void require_same_dims(const Volume3D& a, const Volume3D& b, const char* what) {
    if (a.dims() != b.dims()) {
        throw DimensionMismatch(std::string(what) + ": dims differ (" + a.dims().to_string() +
                                " vs " + b.dims().to_string() + ")");
    }
}

}  // namespace skeltop
