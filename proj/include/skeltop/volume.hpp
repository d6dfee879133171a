#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace skeltop {

struct Dims {
    std::size_t depth = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t voxel_count() const noexcept { return depth * height * width; }
    bool operator==(const Dims&) const = default;
    std::string to_string() const;
};

/// Voxel size along (z, y, x). Distances are in voxel units unless a caller
/// explicitly asks for physical units.
struct Spacing {
    double z = 1.0;
    double y = 1.0;
    double x = 1.0;

    bool operator==(const Spacing&) const = default;
};

enum class VolumeKind { Probability, Binary };

const char* to_string(VolumeKind kind) noexcept;

struct VoxelCoord {
    int z = 0;
    int y = 0;
    int x = 0;

    auto operator<=>(const VoxelCoord&) const = default;
};

double squared_distance(const VoxelCoord& a, const VoxelCoord& b) noexcept;
double distance(const VoxelCoord& a, const VoxelCoord& b) noexcept;

/// Dense scalar field stored depth-major, then row-major (x fastest).
///
/// A Volume3D is immutable once built. The constructor validates the payload
/// length and the value domain implied by `kind`.
class Volume3D {
public:
    Volume3D(Dims dims, VolumeKind kind, std::vector<float> data, Spacing spacing = {});

    static Volume3D zeros(Dims dims, VolumeKind kind, Spacing spacing = {});

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    VolumeKind kind() const noexcept { return kind_; }
    std::span<const float> data() const noexcept { return data_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t index(std::size_t z, std::size_t y, std::size_t x) const noexcept {
        return (z * dims_.height + y) * dims_.width + x;
    }
    std::size_t index(const VoxelCoord& c) const noexcept {
        return index(static_cast<std::size_t>(c.z), static_cast<std::size_t>(c.y),
                     static_cast<std::size_t>(c.x));
    }
    VoxelCoord coord(std::size_t flat) const noexcept;

    float at(std::size_t z, std::size_t y, std::size_t x) const noexcept {
        return data_[index(z, y, x)];
    }
    float at(const VoxelCoord& c) const noexcept { return data_[index(c)]; }

    bool contains(int z, int y, int x) const noexcept;
    bool contains(const VoxelCoord& c) const noexcept { return contains(c.z, c.y, c.x); }

    /// Binary volumes: set voxels; probability volumes: voxels > 0.
    std::size_t foreground_count() const noexcept;
    std::vector<VoxelCoord> foreground() const;

    bool operator==(const Volume3D&) const = default;

private:
    Dims dims_;
    Spacing spacing_;
    VolumeKind kind_;
    std::vector<float> data_;
};

/// Binary mask from coordinates; every coordinate must lie inside `dims`.
Volume3D mask_from_coords(Dims dims, std::span<const VoxelCoord> coords, Spacing spacing = {});

/// Reinterprets a binary volume as a probability volume (values unchanged).
Volume3D as_probability(const Volume3D& vol);

/// output[i] = 1 iff input[i] > tau. Requires 0 < tau < 1.
Volume3D threshold(const Volume3D& prob, double tau = 0.5);

/// Foreground voxels with at least one 6-neighbour that is background or
/// outside the volume, in ascending flat-index order.
std::vector<VoxelCoord> surface_voxels(const Volume3D& mask);

/// Throws DimensionMismatch naming both shapes.
void require_same_dims(const Volume3D& a, const Volume3D& b, const char* what);

}  // namespace skeltop
