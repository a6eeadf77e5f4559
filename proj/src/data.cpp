#include "dcrbm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dcrbm/errors.hpp"
#include "io_util.hpp"

namespace dcrbm {

namespace {

std::string pattern_key(const Eigen::Ref<const Vector>& v) {
    std::string key(static_cast<std::size_t>(v.size()), '0');
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        key[static_cast<std::size_t>(k)] = v[k] != 0.0 ? '1' : '0';
    }
    return key;
}

Matrix from_columns(const std::vector<Vector>& cols, Eigen::Index rows) {
    Matrix out(rows, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = cols[k];
    }
    return out;
}

std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) {
        throw ParseError("truncated IDX header", offset);
    }
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        v = (v << 8) | static_cast<unsigned char>(bytes[offset + k]);
    }
    return v;
}

void append_be32(std::string& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xFF));
    }
}

Matrix parse_idx(const std::string& bytes) {
    if (bytes.size() < 4) {
        throw ParseError("truncated IDX magic number", bytes.size());
    }
    if (bytes[0] != 0 || bytes[1] != 0) {
        throw ParseError("bad IDX magic number (leading bytes must be zero)", bytes[0] != 0 ? 0 : 1);
    }
    if (static_cast<unsigned char>(bytes[2]) != 0x08) {
        throw ParseError("unsupported IDX element type (only unsigned byte 0x08)", 2);
    }
    const int ndims = static_cast<unsigned char>(bytes[3]);
    if (ndims < 1 || ndims > 3) {
        throw ParseError("unsupported IDX dimension count " + std::to_string(ndims), 3);
    }
    std::vector<std::uint32_t> dims;
    for (int d = 0; d < ndims; ++d) {
        dims.push_back(read_be32(bytes, 4 + 4 * static_cast<std::size_t>(d)));
    }
    const std::size_t header = 4 + 4 * static_cast<std::size_t>(ndims);
    const std::size_t count = dims[0];
    std::size_t width = 1;
    for (int d = 1; d < ndims; ++d) {
        width *= dims[static_cast<std::size_t>(d)];
    }
    if (bytes.size() != header + count * width) {
        throw ParseError("IDX payload size " + std::to_string(bytes.size() - header) + " does not match header " +
                             std::to_string(count * width),
                         header);
    }
    const bool binary = std::all_of(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end(),
                                    [](char c) { return c == 0 || c == 1; });
    Matrix out(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(count));
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t k = 0; k < width; ++k) {
            const double raw = static_cast<unsigned char>(bytes[header + s * width + k]);
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) = binary ? raw : raw / 255.0;
        }
    }
    return out;
}

Matrix parse_csv(const std::string& text, std::size_t declared_dim) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t end = line.find(',', pos);
            if (end == std::string::npos) {
                end = line.size();
            }
            std::string field = line.substr(pos, end - pos);
            const auto first = field.find_first_not_of(" \t");
            const auto last = field.find_last_not_of(" \t");
            field = first == std::string::npos ? "" : field.substr(first, last - first + 1);
            double value = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
            if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
                throw ParseError("non-numeric CSV field '" + field + "'", line_no);
            }
            row.push_back(value);
            pos = end + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("CSV row has " + std::to_string(row.size()) + " fields, expected " +
                                 std::to_string(rows.front().size()),
                             line_no);
        }
        rows.push_back(std::move(row));
    }
    const std::size_t width = rows.empty() ? declared_dim : rows.front().size();
    if (declared_dim != 0 && width != declared_dim) {
        throw DimensionError("CSV rows have " + std::to_string(width) + " fields, declared dimension is " +
                             std::to_string(declared_dim));
    }
    Matrix out(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
        for (std::size_t k = 0; k < width; ++k) {
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) = rows[s][k];
        }
    }
    return out;
}

Matrix parse_json(const std::string& text, std::size_t declared_dim) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    if (!j.is_array()) {
        throw ParseError("JSON dataset must be an array of arrays", 0);
    }
    const std::size_t width = j.empty() ? declared_dim : j.front().size();
    if (declared_dim != 0 && width != declared_dim) {
        throw DimensionError("JSON rows have " + std::to_string(width) + " entries, declared dimension is " +
                             std::to_string(declared_dim));
    }
    Matrix out(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(j.size()));
    for (std::size_t s = 0; s < j.size(); ++s) {
        const auto& row = j[s];
        if (!row.is_array() || row.size() != width) {
            throw ParseError("JSON row " + std::to_string(s) + " has the wrong shape", s);
        }
        for (std::size_t k = 0; k < width; ++k) {
            if (!row[k].is_number()) {
                throw ParseError("JSON row " + std::to_string(s) + " has a non-numeric entry", s);
            }
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) = row[k].get<double>();
        }
    }
    return out;
}

// Ten digit-like stroke skeletons in the unit square (x right, y down).
using Polyline = std::vector<std::pair<double, double>>;

std::vector<Polyline> arc(double cx, double cy, double rx, double ry, double from, double to, int pieces) {
    Polyline line;
    for (int k = 0; k <= pieces; ++k) {
        const double t = from + (to - from) * k / pieces;
        line.emplace_back(cx + rx * std::cos(t), cy + ry * std::sin(t));
    }
    return {line};
}

std::vector<Polyline> glyph(int digit) {
    constexpr double pi = std::numbers::pi;
    auto join = [](std::vector<Polyline> a, const std::vector<Polyline>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    switch (digit) {
    case 0:
        return arc(0.5, 0.5, 0.22, 0.32, 0.0, 2.0 * pi, 16);
    case 1:
        return {{{0.38, 0.28}, {0.52, 0.15}, {0.52, 0.85}}};
    case 2:
        return join(arc(0.5, 0.35, 0.2, 0.18, -pi, 0.25 * pi, 8), {{{0.64, 0.48}, {0.3, 0.85}, {0.74, 0.85}}});
    case 3:
        return join(arc(0.48, 0.33, 0.2, 0.17, -0.9 * pi, 0.5 * pi, 8), arc(0.48, 0.66, 0.22, 0.19, -0.5 * pi, 0.9 * pi, 8));
    case 4:
        return {{{0.62, 0.85}, {0.62, 0.15}, {0.26, 0.62}, {0.76, 0.62}}};
    case 5:
        return join({{{0.7, 0.16}, {0.36, 0.16}, {0.33, 0.46}}}, arc(0.5, 0.64, 0.2, 0.2, -0.75 * pi, 0.8 * pi, 9));
    case 6:
        return join({{{0.66, 0.16}, {0.42, 0.4}, {0.3, 0.66}}}, arc(0.5, 0.67, 0.2, 0.18, 0.0, 2.0 * pi, 12));
    case 7:
        return {{{0.28, 0.16}, {0.74, 0.16}, {0.44, 0.86}}};
    case 8:
        return join(arc(0.5, 0.32, 0.17, 0.16, 0.0, 2.0 * pi, 12), arc(0.5, 0.67, 0.21, 0.18, 0.0, 2.0 * pi, 12));
    default:
        return join(arc(0.5, 0.35, 0.19, 0.18, 0.0, 2.0 * pi, 12), {{{0.69, 0.36}, {0.62, 0.86}}});
    }
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = ax + t * dx - px;
    const double ey = ay + t * dy - py;
    return std::sqrt(ex * ex + ey * ey);
}

} // namespace

void BinaryDataset::validate() const {
    if (!is_binary(patterns)) {
        throw Error("dataset '" + name + "' contains values other than 0 and 1");
    }
}

BinaryDataset gen_bars_stripes(int side) {
    if (side < 1 || side > 16) {
        throw ConfigError("bars-stripes side must be in [1, 16]");
    }
    const auto d = static_cast<Eigen::Index>(side);
    std::vector<Vector> cols;
    std::set<std::string> seen;
    auto add = [&](const Vector& v) {
        if (seen.insert(pattern_key(v)).second) {
            cols.push_back(v);
        }
    };
    for (int rotated = 0; rotated < 2; ++rotated) {
        for (std::uint64_t code = 0; code < (std::uint64_t{1} << side); ++code) {
            Vector v(d * d);
            for (Eigen::Index r = 0; r < d; ++r) {
                for (Eigen::Index c = 0; c < d; ++c) {
                    // Bars: row r is all bit r. Stripes: the bars pattern
                    // rotated 90 degrees clockwise, so column c carries bit d-1-c.
                    const auto bit = static_cast<int>(rotated ? d - 1 - c : r);
                    v[r * d + c] = static_cast<double>((code >> bit) & 1U);
                }
            }
            add(v);
        }
    }
    return BinaryDataset{"bars-stripes-" + std::to_string(side), from_columns(cols, d * d)};
}

BinaryDataset gen_shifting_bar(int length, int bar) {
    if (bar < 1 || bar >= length) {
        throw ConfigError("shifting-bar needs 1 <= B < N");
    }
    Matrix out = Matrix::Zero(length, length);
    for (int shift = 0; shift < length; ++shift) {
        for (int k = 0; k < bar; ++k) {
            out((shift + k) % length, shift) = 1.0;
        }
    }
    return BinaryDataset{"shifting-bar-" + std::to_string(length) + "-" + std::to_string(bar), out};
}

BinaryDataset binarize_statistical(const Matrix& grayscale, RngStream& rng, std::string name) {
    if (!((grayscale.array() >= 0.0) && (grayscale.array() <= 1.0)).all()) {
        throw Error("statistical binarization needs intensities in [0, 1]");
    }
    Matrix out(grayscale.rows(), grayscale.cols());
    for (Eigen::Index s = 0; s < grayscale.cols(); ++s) {
        for (Eigen::Index k = 0; k < grayscale.rows(); ++k) {
            out(k, s) = rng.bernoulli(grayscale(k, s)) ? 1.0 : 0.0;
        }
    }
    return BinaryDataset{std::move(name), std::move(out)};
}

Matrix gen_stroke_images(int count, RngStream& rng) {
    constexpr int kSide = 28;
    Matrix out = Matrix::Zero(kSide * kSide, count);
    for (int s = 0; s < count; ++s) {
        const int digit = static_cast<int>(rng.next_u64() % 10);
        const double scale = 0.8 + 0.25 * rng.uniform();
        const double angle = (rng.uniform() - 0.5) * 0.4;
        const double slant = (rng.uniform() - 0.5) * 0.3;
        const double shift_x = (rng.uniform() - 0.5) * 0.12;
        const double shift_y = (rng.uniform() - 0.5) * 0.12;
        const double pen = 1.1 + 0.8 * rng.uniform();  // half-width in pixels

        std::vector<Polyline> strokes = glyph(digit);
        for (auto& line : strokes) {
            for (auto& [x, y] : line) {
                const double u = (x - 0.5) + slant * (y - 0.5);
                const double v = y - 0.5;
                const double rx = std::cos(angle) * u - std::sin(angle) * v;
                const double ry = std::sin(angle) * u + std::cos(angle) * v;
                x = (0.5 + scale * rx + shift_x) * kSide;
                y = (0.5 + scale * ry + shift_y) * kSide;
            }
        }
        for (int r = 0; r < kSide; ++r) {
            for (int c = 0; c < kSide; ++c) {
                const double px = c + 0.5;
                const double py = r + 0.5;
                double best = 1e9;
                for (const auto& line : strokes) {
                    for (std::size_t k = 1; k < line.size(); ++k) {
                        best = std::min(best, segment_distance(px, py, line[k - 1].first, line[k - 1].second,
                                                               line[k].first, line[k].second));
                    }
                }
                out(r * kSide + c, s) = std::clamp(pen - best + 0.5, 0.0, 1.0);
            }
        }
    }
    return out;
}

MatrixFormat parse_matrix_format(const std::string& text) {
    if (text == "idx") {
        return MatrixFormat::Idx;
    }
    if (text == "csv") {
        return MatrixFormat::Csv;
    }
    if (text == "json" || text == "raw-json") {
        return MatrixFormat::Json;
    }
    throw ConfigError("unknown dataset format '" + text + "' (expected idx, csv or json)");
}

std::string to_string(MatrixFormat format) {
    switch (format) {
    case MatrixFormat::Idx:
        return "idx";
    case MatrixFormat::Csv:
        return "csv";
    default:
        return "json";
    }
}

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format, std::size_t declared_dim) {
    if (!std::filesystem::exists(path)) {
        throw IoError("dataset file not found: " + path.string());
    }
    const std::string bytes = detail::read_file(path);
    Matrix out;
    switch (format) {
    case MatrixFormat::Idx:
        out = parse_idx(bytes);
        if (declared_dim != 0 && static_cast<std::size_t>(out.rows()) != declared_dim) {
            throw DimensionError("IDX sample size " + std::to_string(out.rows()) + " differs from declared dimension " +
                                 std::to_string(declared_dim));
        }
        break;
    case MatrixFormat::Csv:
        out = parse_csv(bytes, declared_dim);
        break;
    case MatrixFormat::Json:
        out = parse_json(bytes, declared_dim);
        break;
    }
    return out;
}

BinaryDataset load_binary_dataset(const std::filesystem::path& path, MatrixFormat format, std::size_t declared_dim) {
    BinaryDataset ds{path.stem().string(), load_matrix(path, format, declared_dim)};
    ds.validate();
    return ds;
}

void write_matrix(const std::filesystem::path& path, const Matrix& data, MatrixFormat format) {
    std::string out;
    switch (format) {
    case MatrixFormat::Idx: {
        const bool binary = is_binary(data);
        const auto m = static_cast<std::uint32_t>(data.rows());
        const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(static_cast<double>(m))));
        out.append({0, 0, 0x08, 0x03});
        append_be32(out, static_cast<std::uint32_t>(data.cols()));
        if (side * side == m) {
            append_be32(out, side);
            append_be32(out, side);
        } else {
            append_be32(out, 1);
            append_be32(out, m);
        }
        for (Eigen::Index s = 0; s < data.cols(); ++s) {
            for (Eigen::Index k = 0; k < data.rows(); ++k) {
                const double v = binary ? data(k, s) : std::round(255.0 * std::clamp(data(k, s), 0.0, 1.0));
                out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
            }
        }
        break;
    }
    case MatrixFormat::Csv:
        for (Eigen::Index s = 0; s < data.cols(); ++s) {
            for (Eigen::Index k = 0; k < data.rows(); ++k) {
                if (k > 0) {
                    out.push_back(',');
                }
                out += format_number(data(k, s));
            }
            out.push_back('\n');
        }
        break;
    case MatrixFormat::Json: {
        nlohmann::json j = nlohmann::json::array();
        for (Eigen::Index s = 0; s < data.cols(); ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index k = 0; k < data.rows(); ++k) {
                const double v = data(k, s);
                if (v == std::floor(v) && std::abs(v) < 1e15) {
                    row.push_back(static_cast<std::int64_t>(v));
                } else {
                    row.push_back(v);
                }
            }
            j.push_back(std::move(row));
        }
        out = j.dump() + "\n";
        break;
    }
    }
    detail::write_file_atomic(path, out);
}

void write_manifest(const std::filesystem::path& data_path, const BinaryDataset& dataset, MatrixFormat format) {
    const nlohmann::json j = {{"schema_version", 1},
                              {"name", dataset.name},
                              {"dim", dataset.dim()},
                              {"count", dataset.size()},
                              {"format", to_string(format)},
                              {"file", data_path.filename().string()}};
    std::filesystem::path manifest = data_path;
    manifest += ".manifest.json";
    detail::write_file_atomic(manifest, j.dump(2) + "\n");
}

std::vector<std::size_t> epoch_permutation(std::size_t count, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> perm(count);
    for (std::size_t k = 0; k < count; ++k) {
        perm[k] = k;
    }
    RngStream rng(seed, streams::kShuffleBase + epoch);
    for (std::size_t k = count; k > 1; --k) {
        __extension__ using u128 = unsigned __int128;
        const auto j = static_cast<std::size_t>((static_cast<u128>(rng.next_u64()) * k) >> 64);
        std::swap(perm[k - 1], perm[j]);
    }
    return perm;
}

std::vector<Matrix> minibatches(const Matrix& data, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch) {
    const auto count = static_cast<std::size_t>(data.cols());
    if (batch_size == 0 || batch_size > count) {
        batch_size = count;
    }
    const std::vector<std::size_t> perm = epoch_permutation(count, seed, epoch);
    std::vector<Matrix> batches;
    for (std::size_t start = 0; start < count; start += batch_size) {
        const std::size_t len = std::min(batch_size, count - start);
        Matrix batch(data.rows(), static_cast<Eigen::Index>(len));
        for (std::size_t k = 0; k < len; ++k) {
            batch.col(static_cast<Eigen::Index>(k)) = data.col(static_cast<Eigen::Index>(perm[start + k]));
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

} // namespace dcrbm
