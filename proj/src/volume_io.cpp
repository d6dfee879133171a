#include "skeltop/volume_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "skeltop/binary_io.hpp"
#include "skeltop/error.hpp"

namespace skeltop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<float> decode_f32_le(std::string_view bytes) {
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 3; b >= 0; --b) {
            u = (u << 8) | static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)]);
        }
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

std::string encode_f32_le(std::span<const float> values) {
    std::string out(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto u = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) {
            out[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>(u & 0xffu);
            u >>= 8;
        }
    }
    return out;
}

}  // namespace detail

namespace {

enum class Dtype { F32, U8 };

std::size_t dtype_size(Dtype t) { return t == Dtype::F32 ? 4 : 1; }

std::vector<float> decode_payload(std::string_view bytes, Dtype dtype) {
    if (dtype == Dtype::F32) return detail::decode_f32_le(bytes);
    std::vector<float> out(bytes.size());
    std::transform(bytes.begin(), bytes.end(), out.begin(),
                   [](char c) { return static_cast<float>(static_cast<unsigned char>(c)); });
    return out;
}

std::string encode_payload(std::span<const float> values, Dtype dtype) {
    if (dtype == Dtype::F32) return detail::encode_f32_le(values);
    std::string out(values.size(), '\0');
    std::transform(values.begin(), values.end(), out.begin(),
                   [](float v) { return static_cast<char>(static_cast<unsigned char>(v)); });
    return out;
}

Volume3D build_volume(const std::string& where, Dims dims, VolumeKind kind,
                      std::vector<float> data, Spacing spacing) {
    try {
        return Volume3D(dims, kind, std::move(data), spacing);
    } catch (const Error& e) {
        throw ParseError(where, e.what());
    }
}

void check_payload_size(const std::string& where, const fs::path& file, std::size_t bytes,
                        Dims dims, Dtype dtype) {
    const std::size_t expected = dims.voxel_count() * dtype_size(dtype);
    if (bytes != expected) {
        throw ParseError(where, "size mismatch in " + file.string() + ": payload has " +
                                    std::to_string(bytes / dtype_size(dtype)) +
                                    " scalars but dims " + dims.to_string() + " need " +
                                    std::to_string(dims.voxel_count()));
    }
}

// ---------------------------------------------------------------- RawJson

template <class T>
T field(const json& j, const char* name, const fs::path& path) {
    const std::string where = path.string() + ": field \"" + name + "\"";
    if (!j.contains(name)) throw ParseError(where, "missing");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where, std::string("wrong type: ") + e.what());
    }
}

Volume3D read_raw_json(const fs::path& path) {
    const std::string text = detail::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), std::string("malformed JSON header: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(path.string(), "header must be a JSON object");

    const auto field_where = [&](const char* name) {
        return path.string() + ": field \"" + name + "\"";
    };

    const auto dims_v = field<std::vector<long long>>(j, "dims", path);
    if (dims_v.size() != 3 || std::any_of(dims_v.begin(), dims_v.end(),
                                          [](long long v) { return v <= 0; })) {
        throw ParseError(field_where("dims"), "expected three positive integers [d,h,w]");
    }
    const Dims dims{static_cast<std::size_t>(dims_v[0]), static_cast<std::size_t>(dims_v[1]),
                    static_cast<std::size_t>(dims_v[2])};

    Spacing spacing;
    if (j.contains("spacing")) {
        const auto s = field<std::vector<double>>(j, "spacing", path);
        if (s.size() != 3 || std::any_of(s.begin(), s.end(), [](double v) { return !(v > 0); })) {
            throw ParseError(field_where("spacing"), "expected three positive reals [sz,sy,sx]");
        }
        spacing = {s[0], s[1], s[2]};
    }

    const auto kind_s = field<std::string>(j, "kind", path);
    VolumeKind kind;
    if (kind_s == "probability") {
        kind = VolumeKind::Probability;
    } else if (kind_s == "binary") {
        kind = VolumeKind::Binary;
    } else {
        throw ParseError(field_where("kind"),
                         "expected \"probability\" or \"binary\", got \"" + kind_s + "\"");
    }

    const auto dtype_s = field<std::string>(j, "dtype", path);
    Dtype dtype;
    if (dtype_s == "f32") {
        dtype = Dtype::F32;
    } else if (dtype_s == "u8") {
        dtype = Dtype::U8;
    } else {
        throw ParseError(field_where("dtype"), "expected \"f32\" or \"u8\", got \"" + dtype_s + "\"");
    }

    const auto data_file = path.parent_path() / field<std::string>(j, "data_file", path);
    const std::string bytes = detail::read_file(data_file);
    check_payload_size(field_where("data_file"), data_file, bytes.size(), dims, dtype);
    return build_volume(field_where("data_file"), dims, kind, decode_payload(bytes, dtype),
                        spacing);
}

void write_raw_json(const Volume3D& vol, const fs::path& path) {
    const Dtype dtype = vol.kind() == VolumeKind::Binary ? Dtype::U8 : Dtype::F32;
    fs::path data_name = path.filename();
    data_name.replace_extension(".raw");
    json j;
    j["dims"] = {vol.dims().depth, vol.dims().height, vol.dims().width};
    j["spacing"] = {vol.spacing().z, vol.spacing().y, vol.spacing().x};
    j["kind"] = to_string(vol.kind());
    j["dtype"] = dtype == Dtype::U8 ? "u8" : "f32";
    j["data_file"] = data_name.string();
    detail::write_file(path.parent_path() / data_name, encode_payload(vol.data(), dtype));
    detail::write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- NRRD

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

Volume3D read_nrrd(const fs::path& path) {
    const std::string bytes = detail::read_file(path);
    const std::string p = path.string();

    std::size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= bytes.size()) return false;
        const auto nl = bytes.find('\n', pos);
        const auto end = nl == std::string::npos ? bytes.size() : nl;
        line = bytes.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = nl == std::string::npos ? bytes.size() : nl + 1;
        return true;
    };

    std::string line;
    if (!next_line(line) || line != "NRRD0004") {
        throw ParseError(p + ": magic", "expected NRRD0004");
    }

    std::string type, encoding, endian;
    long long dimension = -1;
    std::vector<long long> sizes;
    Spacing spacing;
    bool header_closed = false;
    int line_no = 1;
    while (next_line(line)) {
        ++line_no;
        if (line.empty()) {
            header_closed = true;
            break;
        }
        if (line[0] == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos || line.find(":=") != std::string::npos) {
            throw ParseError(p + ": line " + std::to_string(line_no),
                             "expected \"<field>: <value>\"");
        }
        const std::string key = trim(std::string_view(line).substr(0, colon));
        const std::string value = trim(std::string_view(line).substr(colon + 1));
        const std::string where = p + ": field \"" + key + "\"";
        std::istringstream vs(value);
        if (key == "type") {
            type = value;
            if (type != "uint8" && type != "float") {
                throw ParseError(where, "unsupported type \"" + type + "\" (uint8|float)");
            }
        } else if (key == "dimension") {
            if (!(vs >> dimension) || dimension != 3) {
                throw ParseError(where, "only dimension: 3 is supported");
            }
        } else if (key == "sizes") {
            long long v;
            while (vs >> v) sizes.push_back(v);
            if (!vs.eof() || sizes.size() != 3 ||
                std::any_of(sizes.begin(), sizes.end(), [](long long s) { return s <= 0; })) {
                throw ParseError(where, "expected three positive integers \"w h d\"");
            }
        } else if (key == "encoding") {
            encoding = value;
            if (encoding != "raw") throw ParseError(where, "unsupported encoding \"" + value + "\"");
        } else if (key == "endian") {
            endian = value;
            if (endian != "little") throw ParseError(where, "unsupported endian \"" + value + "\"");
        } else if (key == "spacings") {
            double sx, sy, sz;
            if (!(vs >> sx >> sy >> sz) || !(sx > 0 && sy > 0 && sz > 0)) {
                throw ParseError(where, "expected three positive reals \"sx sy sz\"");
            }
            spacing = {sz, sy, sx};
        } else {
            throw ParseError(where, "unsupported field");
        }
    }
    if (!header_closed) throw ParseError(p + ": header", "missing blank line before payload");
    if (type.empty()) throw ParseError(p + ": field \"type\"", "missing");
    if (dimension < 0) throw ParseError(p + ": field \"dimension\"", "missing");
    if (sizes.empty()) throw ParseError(p + ": field \"sizes\"", "missing");
    if (encoding.empty()) throw ParseError(p + ": field \"encoding\"", "missing");
    if (type == "float" && endian.empty()) throw ParseError(p + ": field \"endian\"", "missing");

    const Dims dims{static_cast<std::size_t>(sizes[2]), static_cast<std::size_t>(sizes[1]),
                    static_cast<std::size_t>(sizes[0])};
    const Dtype dtype = type == "float" ? Dtype::F32 : Dtype::U8;
    const std::string_view payload = std::string_view(bytes).substr(pos);
    check_payload_size(p + ": field \"sizes\"", path, payload.size(), dims, dtype);
    return build_volume(p + ": payload", dims,
                        dtype == Dtype::U8 ? VolumeKind::Binary : VolumeKind::Probability,
                        decode_payload(payload, dtype), spacing);
}

std::string format_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void write_nrrd(const Volume3D& vol, const fs::path& path) {
    const Dtype dtype = vol.kind() == VolumeKind::Binary ? Dtype::U8 : Dtype::F32;
    std::string out = "NRRD0004\n";
    out += std::string("type: ") + (dtype == Dtype::U8 ? "uint8" : "float") + "\n";
    out += "dimension: 3\n";
    out += "sizes: " + std::to_string(vol.dims().width) + " " + std::to_string(vol.dims().height) +
           " " + std::to_string(vol.dims().depth) + "\n";
    out += "spacings: " + format_real(vol.spacing().x) + " " + format_real(vol.spacing().y) + " " +
           format_real(vol.spacing().z) + "\n";
    out += "encoding: raw\n";
    out += "endian: little\n\n";
    out += encode_payload(vol.data(), dtype);
    detail::write_file(path, out);
}

}  // namespace

VolumeFormat format_from_path(const fs::path& path) {
    return path.extension() == ".nrrd" ? VolumeFormat::Nrrd : VolumeFormat::RawJson;
}

Volume3D read_volume(const fs::path& path, VolumeFormat format) {
    return format == VolumeFormat::Nrrd ? read_nrrd(path) : read_raw_json(path);
}

Volume3D read_volume(const fs::path& path) { return read_volume(path, format_from_path(path)); }

void write_volume(const Volume3D& vol, const fs::path& path, VolumeFormat format) {
    if (format == VolumeFormat::Nrrd) {
        write_nrrd(vol, path);
    } else {
        write_raw_json(vol, path);
    }
}

void write_volume(const Volume3D& vol, const fs::path& path) {
    write_volume(vol, path, format_from_path(path));
}

}  // namespace skeltop
