#include "skeltop/inflate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "skeltop/binary_io.hpp"
#include "skeltop/error.hpp"
#include "skeltop/parallel.hpp"

namespace skeltop {

namespace fs = std::filesystem;

namespace {

void require_finite(const std::vector<double>& w, const char* what) {
    if (std::any_of(w.begin(), w.end(), [](double v) { return !std::isfinite(v); })) {
        throw InvalidParameter(std::string(what) + ": weights must be finite");
    }
}

std::size_t output_extent(std::size_t n, std::size_t k, std::size_t stride, const char* axis) {
    if (stride == 0) throw InvalidParameter(std::string("stride along ") + axis + " must be positive");
    const std::size_t padded = n + 2 * (k / 2);
    if (n == 0 || padded < k) {
        throw InvalidParameter(std::string("convolution yields zero-size output along ") + axis);
    }
    return (padded - k) / stride + 1;
}

Kernel3D empty_like(const Kernel2D& k, std::size_t k_d) {
    k.validate();
    if (k_d < 1) throw InvalidParameter("inflation depth k_d must be >= 1");
    Kernel3D out{k.c_out, k.c_in, k_d, k.k_h, k.k_w, {}};
    out.weights.assign(k.c_out * k.c_in * k_d * k.k_h * k.k_w, 0.0);
    return out;
}

}  // namespace

void Kernel2D::validate() const {
    if (c_out == 0 || c_in == 0 || k_h == 0 || k_w == 0) {
        throw InvalidParameter("Kernel2D: shape entries must be positive");
    }
    if (weights.size() != c_out * c_in * k_h * k_w) {
        throw DimensionMismatch("Kernel2D: weight count does not match shape");
    }
    require_finite(weights, "Kernel2D");
}

void Kernel3D::validate() const {
    if (c_out == 0 || c_in == 0 || k_d == 0 || k_h == 0 || k_w == 0) {
        throw InvalidParameter("Kernel3D: shape entries must be positive");
    }
    if (weights.size() != c_out * c_in * k_d * k_h * k_w) {
        throw DimensionMismatch("Kernel3D: weight count does not match shape");
    }
    require_finite(weights, "Kernel3D");
}

Kernel3D inflate_center(const Kernel2D& k, std::size_t k_d) {
    auto out = empty_like(k, k_d);
    const std::size_t c = k_d / 2;
    for (std::size_t o = 0; o < k.c_out; ++o)
        for (std::size_t i = 0; i < k.c_in; ++i)
            for (std::size_t y = 0; y < k.k_h; ++y)
                for (std::size_t x = 0; x < k.k_w; ++x)
                    out.weights[out.offset(o, i, c, y, x)] = k.at(o, i, y, x);
    return out;
}

Kernel3D inflate_average(const Kernel2D& k, std::size_t k_d) {
    auto out = empty_like(k, k_d);
    const double scale = static_cast<double>(k_d);
    for (std::size_t o = 0; o < k.c_out; ++o)
        for (std::size_t i = 0; i < k.c_in; ++i)
            for (std::size_t t = 0; t < k_d; ++t)
                for (std::size_t y = 0; y < k.k_h; ++y)
                    for (std::size_t x = 0; x < k.k_w; ++x)
                        out.weights[out.offset(o, i, t, y, x)] = k.at(o, i, y, x) / scale;
    return out;
}

Kernel2D depth_sum(const Kernel3D& k) {
    k.validate();
    Kernel2D out{k.c_out, k.c_in, k.k_h, k.k_w, std::vector<double>(k.c_out * k.c_in * k.k_h * k.k_w)};
    for (std::size_t o = 0; o < k.c_out; ++o)
        for (std::size_t i = 0; i < k.c_in; ++i)
            for (std::size_t y = 0; y < k.k_h; ++y)
                for (std::size_t x = 0; x < k.k_w; ++x) {
                    double s = 0.0;
                    for (std::size_t t = 0; t < k.k_d; ++t) s += k.at(o, i, t, y, x);
                    out.weights[((o * k.c_in + i) * k.k_h + y) * k.k_w + x] = s;
                }
    return out;
}

Field2D conv2d(const Field2D& img, const Kernel2D& k, std::size_t stride) {
    k.validate();
    if (img.channels != k.c_in) {
        throw DimensionMismatch("conv2d: input has " + std::to_string(img.channels) +
                                " channels, kernel expects " + std::to_string(k.c_in));
    }
    if (img.data.size() != img.channels * img.height * img.width) {
        throw DimensionMismatch("conv2d: field payload does not match its shape");
    }
    const std::size_t oh = output_extent(img.height, k.k_h, stride, "height");
    const std::size_t ow = output_extent(img.width, k.k_w, stride, "width");
    const auto ph = static_cast<std::ptrdiff_t>(k.k_h / 2);
    const auto pw = static_cast<std::ptrdiff_t>(k.k_w / 2);

    Field2D out{k.c_out, oh, ow, std::vector<double>(k.c_out * oh * ow, 0.0)};
    parallel_for(k.c_out, [&](std::size_t o_begin, std::size_t o_end) {
        for (std::size_t o = o_begin; o < o_end; ++o)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < k.c_in; ++i)
                        for (std::size_t ky = 0; ky < k.k_h; ++ky) {
                            const auto sy = static_cast<std::ptrdiff_t>(y * stride + ky) - ph;
                            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(img.height)) continue;
                            for (std::size_t kx = 0; kx < k.k_w; ++kx) {
                                const auto sx = static_cast<std::ptrdiff_t>(x * stride + kx) - pw;
                                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(img.width)) continue;
                                acc += k.at(o, i, ky, kx) *
                                       img.at(i, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                            }
                        }
                    out.data[(o * oh + y) * ow + x] = acc;
                }
    });
    return out;
}

Field3D conv3d(const Field3D& vol, const Kernel3D& k, Stride3 stride) {
    k.validate();
    if (vol.channels != k.c_in) {
        throw DimensionMismatch("conv3d: input has " + std::to_string(vol.channels) +
                                " channels, kernel expects " + std::to_string(k.c_in));
    }
    if (vol.data.size() != vol.channels * vol.depth * vol.height * vol.width) {
        throw DimensionMismatch("conv3d: field payload does not match its shape");
    }
    const std::size_t od = output_extent(vol.depth, k.k_d, stride.d, "depth");
    const std::size_t oh = output_extent(vol.height, k.k_h, stride.h, "height");
    const std::size_t ow = output_extent(vol.width, k.k_w, stride.w, "width");
    const auto pd = static_cast<std::ptrdiff_t>(k.k_d / 2);
    const auto ph = static_cast<std::ptrdiff_t>(k.k_h / 2);
    const auto pw = static_cast<std::ptrdiff_t>(k.k_w / 2);
    const auto inside = [](std::ptrdiff_t v, std::size_t n) {
        return v >= 0 && v < static_cast<std::ptrdiff_t>(n);
    };

    Field3D out{k.c_out, od, oh, ow, std::vector<double>(k.c_out * od * oh * ow, 0.0)};
    parallel_for(k.c_out, [&](std::size_t o_begin, std::size_t o_end) {
        for (std::size_t o = o_begin; o < o_end; ++o)
            for (std::size_t z = 0; z < od; ++z)
                for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t x = 0; x < ow; ++x) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < k.c_in; ++i)
                            for (std::size_t kz = 0; kz < k.k_d; ++kz) {
                                const auto sz = static_cast<std::ptrdiff_t>(z * stride.d + kz) - pd;
                                if (!inside(sz, vol.depth)) continue;
                                for (std::size_t ky = 0; ky < k.k_h; ++ky) {
                                    const auto sy = static_cast<std::ptrdiff_t>(y * stride.h + ky) - ph;
                                    if (!inside(sy, vol.height)) continue;
                                    for (std::size_t kx = 0; kx < k.k_w; ++kx) {
                                        const auto sx = static_cast<std::ptrdiff_t>(x * stride.w + kx) - pw;
                                        if (!inside(sx, vol.width)) continue;
                                        acc += k.at(o, i, kz, ky, kx) *
                                               vol.at(i, static_cast<std::size_t>(sz),
                                                      static_cast<std::size_t>(sy),
                                                      static_cast<std::size_t>(sx));
                                    }
                                }
                            }
                        out.data[((o * od + z) * oh + y) * ow + x] = acc;
                    }
    });
    return out;
}

Field2D depth_slice(const Field3D& vol, std::size_t t) {
    if (t >= vol.depth) throw InvalidParameter("depth_slice: index out of range");
    Field2D out{vol.channels, vol.height, vol.width, {}};
    out.data.reserve(vol.channels * vol.height * vol.width);
    for (std::size_t c = 0; c < vol.channels; ++c)
        for (std::size_t y = 0; y < vol.height; ++y)
            for (std::size_t x = 0; x < vol.width; ++x) out.data.push_back(vol.at(c, t, y, x));
    return out;
}

Field3D repeat_along_depth(const Field2D& slice, std::size_t depth) {
    Field3D out{slice.channels, depth, slice.height, slice.width, {}};
    out.data.reserve(slice.channels * depth * slice.height * slice.width);
    for (std::size_t c = 0; c < slice.channels; ++c)
        for (std::size_t z = 0; z < depth; ++z)
            for (std::size_t y = 0; y < slice.height; ++y)
                for (std::size_t x = 0; x < slice.width; ++x) out.data.push_back(slice.at(c, y, x));
    return out;
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

InflationResiduals verify_inflation(const Kernel2D& k, std::size_t k_d, const Field3D& vol) {
    if (k_d % 2 == 0) throw InvalidParameter("verify_inflation: k_d must be odd, got " + std::to_string(k_d));
    InflationResiduals r;
    const auto center = inflate_center(k, k_d);
    const auto average = inflate_average(k, k_d);
    r.center_mass = max_abs_diff(depth_sum(center).weights, k.weights);
    r.average_mass = max_abs_diff(depth_sum(average).weights, k.weights);

    const auto out3 = conv3d(vol, center);
    for (std::size_t t = 0; t < out3.depth; ++t) {
        const auto expect = conv2d(depth_slice(vol, t), k);
        r.center_slice = std::max(r.center_slice, max_abs_diff(depth_slice(out3, t).data, expect.data));
    }

    const std::size_t half = k_d / 2;
    if (vol.depth >= 2 * half + 1) {
        const auto reference = depth_slice(vol, vol.depth / 2);
        const auto constant = repeat_along_depth(reference, vol.depth);
        const auto avg3 = conv3d(constant, average);
        const auto expect = conv2d(reference, k);
        double worst = 0.0;
        for (std::size_t t = half; t + half < vol.depth; ++t) {
            worst = std::max(worst, max_abs_diff(depth_slice(avg3, t).data, expect.data));
        }
        r.average_interior = worst;
    }
    return r;
}

// ---------------------------------------------------------------- tensor I/O

Tensor read_tensor(const fs::path& path) {
    using nlohmann::json;
    const std::string text = detail::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), std::string("malformed JSON header: ") + e.what());
    }
    const auto where = [&](const char* f) { return path.string() + ": field \"" + f + "\""; };
    if (!j.is_object()) throw ParseError(path.string(), "header must be a JSON object");
    for (const char* f : {"shape", "dtype", "data_file"}) {
        if (!j.contains(f)) throw ParseError(where(f), "missing");
    }
    Tensor t;
    try {
        for (const auto& v : j.at("shape")) {
            const auto n = v.get<long long>();
            if (n <= 0) throw ParseError(where("shape"), "entries must be positive integers");
            t.shape.push_back(static_cast<std::size_t>(n));
        }
    } catch (const json::exception&) {
        throw ParseError(where("shape"), "expected an array of positive integers");
    }
    if (t.shape.empty()) throw ParseError(where("shape"), "must not be empty");
    if (!j.at("dtype").is_string() || j.at("dtype").get<std::string>() != "f32") {
        throw ParseError(where("dtype"), "only \"f32\" is supported");
    }
    if (!j.at("data_file").is_string()) throw ParseError(where("data_file"), "expected a string");
    const auto data_path = path.parent_path() / j.at("data_file").get<std::string>();
    const std::string bytes = detail::read_file(data_path);
    const std::size_t count =
        std::accumulate(t.shape.begin(), t.shape.end(), std::size_t{1}, std::multiplies<>());
    if (bytes.size() != count * 4) {
        throw ParseError(where("data_file"), "size mismatch: payload has " +
                                                 std::to_string(bytes.size() / 4) +
                                                 " scalars, shape needs " + std::to_string(count));
    }
    t.data = detail::decode_f32_le(bytes);
    if (std::any_of(t.data.begin(), t.data.end(), [](float v) { return !std::isfinite(v); })) {
        throw ParseError(where("data_file"), "payload contains non-finite values");
    }
    return t;
}

void write_tensor(const Tensor& t, const fs::path& path) {
    fs::path data_name = path.filename();
    data_name.replace_extension(".raw");
    nlohmann::json j;
    j["shape"] = t.shape;
    j["dtype"] = "f32";
    j["data_file"] = data_name.string();
    detail::write_file(path.parent_path() / data_name, detail::encode_f32_le(t.data));
    detail::write_file(path, j.dump(2) + "\n");
}

Kernel2D kernel2d_from_tensor(const Tensor& t) {
    if (t.shape.size() != 4) {
        throw ParseError("shape", "a 2D kernel needs shape [c_out, c_in, k_h, k_w]");
    }
    Kernel2D k{t.shape[0], t.shape[1], t.shape[2], t.shape[3],
               std::vector<double>(t.data.begin(), t.data.end())};
    k.validate();
    return k;
}

Tensor to_tensor(const Kernel3D& k) {
    Tensor t{{k.c_out, k.c_in, k.k_d, k.k_h, k.k_w}, {}};
    t.data.reserve(k.weights.size());
    for (double w : k.weights) t.data.push_back(static_cast<float>(w));
    return t;
}

Tensor to_tensor(const Kernel2D& k) {
    Tensor t{{k.c_out, k.c_in, k.k_h, k.k_w}, {}};
    t.data.reserve(k.weights.size());
    for (double w : k.weights) t.data.push_back(static_cast<float>(w));
    return t;
}

Field3D field3d_from_tensor(const Tensor& t) {
    if (t.shape.size() == 3) {
        return {1, t.shape[0], t.shape[1], t.shape[2], std::vector<double>(t.data.begin(), t.data.end())};
    }
    if (t.shape.size() == 4) {
        return {t.shape[0], t.shape[1], t.shape[2], t.shape[3],
                std::vector<double>(t.data.begin(), t.data.end())};
    }
    throw ParseError("shape", "a volume tensor needs shape [d,h,w] or [c,d,h,w]");
}

}  // namespace skeltop
