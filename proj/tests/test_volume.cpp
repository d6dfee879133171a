#include <doctest.h>

#include "skeltop/error.hpp"
#include "skeltop/synth.hpp"
#include "skeltop/volume.hpp"
#include "support/oracles.hpp"
#include "support/shapes.hpp"

using namespace skeltop;

namespace {

Volume3D random_prob(Dims d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(d.voxel_count());
    for (auto& x : v) x = static_cast<float>(rng.uniform());
    return Volume3D(d, VolumeKind::Probability, std::move(v));
}

}  // namespace

TEST_CASE("Volume3D validates its invariants") {
    CHECK_THROWS_AS(Volume3D({2, 2, 2}, VolumeKind::Binary, std::vector<float>(7)), DimensionMismatch);
    CHECK_THROWS_AS(Volume3D({2, 2, 2}, VolumeKind::Binary, std::vector<float>(8, 0.5f)), InvalidParameter);
    CHECK_THROWS_AS(Volume3D({1, 1, 1}, VolumeKind::Probability, {1.5f}), InvalidParameter);
    CHECK_THROWS_AS(Volume3D({0, 1, 1}, VolumeKind::Probability, {}), InvalidParameter);
    CHECK_THROWS_AS(Volume3D({1, 1, 1}, VolumeKind::Probability, {0.5f}, {1.0, 0.0, 1.0}), InvalidParameter);
    const Volume3D v({2, 3, 4}, VolumeKind::Probability, std::vector<float>(24, 0.25f), {2.0, 1.0, 0.5});
    CHECK(v.index(1, 2, 3) == 23);
    CHECK(v.coord(23) == VoxelCoord{1, 2, 3});
    CHECK(v.spacing().z == 2.0);
}

TEST_CASE("threshold uses a strict comparison") {
    const Volume3D p({1, 1, 3}, VolumeKind::Probability, {0.2f, 0.5f, 0.7f});
    const auto m = threshold(p, 0.5);
    CHECK(m.kind() == VolumeKind::Binary);
    CHECK(std::vector<float>(m.data().begin(), m.data().end()) == std::vector<float>{0, 0, 1});
    CHECK(threshold(Volume3D::zeros({3, 3, 3}, VolumeKind::Probability)).foreground_count() == 0);
    CHECK_THROWS_AS(threshold(p, 0.0), InvalidParameter);
    CHECK_THROWS_AS(threshold(p, 1.0), InvalidParameter);
}

TEST_CASE("threshold foreground count matches a scalar scan") {
    const auto p = random_prob({8, 8, 8}, 11);
    size_t expected = 0;
    for (float v : p.data()) expected += v > 0.5f;
    CHECK(threshold(p, 0.5).foreground_count() == expected);
}

TEST_CASE("threshold properties") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p = random_prob({6, 7, 5}, seed);
        for (double tau : {0.1, 0.3, 0.5, 0.9}) {
            const auto m = threshold(p, tau);
            CHECK(threshold(as_probability(m), tau) == m);  // idempotent on binary volumes
            CHECK(threshold(p, std::min(0.99, tau + 0.05)).foreground_count() <= m.foreground_count());
        }
    }
}

TEST_CASE("surface voxels") {
    SUBCASE("isolated voxel") {
        const auto m = mask_from_coords({3, 3, 3}, std::vector<VoxelCoord>{{1, 1, 1}});
        CHECK(surface_voxels(m) == std::vector<VoxelCoord>{{1, 1, 1}});
    }
    SUBCASE("3x3x3 cube: all but the centre") {
        const auto m = shapes::from_predicate({5, 5, 5}, [](int z, int y, int x) {
            return shapes::box(z, y, x, 1, 3, 1, 3, 1, 3);
        });
        const auto s = surface_voxels(m);
        CHECK(s.size() == 26);
        CHECK(std::find(s.begin(), s.end(), VoxelCoord{2, 2, 2}) == s.end());
    }
    SUBCASE("5x5x5 cube: 98 by brute-force scan") {
        const auto m = shapes::from_predicate({7, 7, 7}, [](int z, int y, int x) {
            return shapes::box(z, y, x, 1, 5, 1, 5, 1, 5);
        });
        CHECK(oracle::surface(m).size() == 98);
        CHECK(surface_voxels(m).size() == 98);
    }
    SUBCASE("volume border counts as background") {
        const auto m = shapes::from_predicate({3, 3, 3}, [](int, int, int) { return true; });
        CHECK(surface_voxels(m).size() == 26);
    }
    SUBCASE("empty") {
        CHECK(surface_voxels(Volume3D::zeros({2, 2, 2}, VolumeKind::Binary)).empty());
    }
}

TEST_CASE("surface voxels are foreground and match the oracle on the corpus") {
    for (const auto& [name, m] : shapes::corpus()) {
        CAPTURE(name);
        const auto s = surface_voxels(m);
        for (const auto& c : s) CHECK(m.at(c) == 1.0f);
        CHECK(s.size() == oracle::surface(m).size());
    }
}

TEST_CASE("require_same_dims names both shapes") {
    const auto a = Volume3D::zeros({2, 3, 4}, VolumeKind::Binary);
    const auto b = Volume3D::zeros({2, 3, 5}, VolumeKind::Binary);
    try {
        require_same_dims(a, b, "test");
        FAIL("expected DimensionMismatch");
    } catch (const DimensionMismatch& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3x4") != std::string::npos);
        CHECK(msg.find("2x3x5") != std::string::npos);
    }
}
