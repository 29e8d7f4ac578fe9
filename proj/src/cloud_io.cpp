#include "ascn/cloud_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

namespace ascn {

namespace {

using json = nlohmann::json;

// Shortest decimal form that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    // Tolerate an explicit leading '+', which from_chars rejects.
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

bool parse_int(std::string_view tok, long& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_lines(const std::string& text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        std::string_view line(text.data() + start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = pos + 1;
    }
    return lines;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".ply" ? CloudFormat::ply_ascii : CloudFormat::csv;
}

PointCloud parse_cloud_csv(const std::string& text) {
    PointCloud cloud;
    const auto lines = split_lines(text);
    int arity = 0;  // 3 or 4, fixed by the first data row
    bool first_content_row = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (trim(lines[i]).empty()) continue;
        auto fields = split(lines[i], ',');

        double x;
        if (first_content_row && !parse_double(fields[0], x)) {
            // Non-numeric first token: header row, skip it.
            first_content_row = false;
            continue;
        }
        first_content_row = false;

        if (fields.size() != 3 && fields.size() != 4)
            throw ParseError("expected 3 or 4 fields, got " + std::to_string(fields.size()), line_no);
        if (arity == 0)
            arity = static_cast<int>(fields.size());
        else if (static_cast<int>(fields.size()) != arity)
            throw ParseError("inconsistent column count", line_no);

        Point3 p;
        if (!parse_double(fields[0], p.x) || !parse_double(fields[1], p.y) ||
            !parse_double(fields[2], p.z))
            throw ParseError("non-numeric coordinate", line_no);
        if (!p.finite()) throw ParseError("non-finite coordinate", line_no);
        cloud.points.push_back(p);
        if (arity == 4) {
            long r;
            if (!parse_int(fields[3], r)) throw ParseError("non-integer ring index", line_no);
            if (r < 0) throw ParseError("negative ring index", line_no);
            cloud.ring.push_back(static_cast<int>(r));
        }
    }
    if (cloud.points.empty()) throw ParseError("no points", 0);
    return cloud;
}

PointCloud parse_cloud_ply(const std::string& text) {
    const auto lines = split_lines(text);
    std::size_t i = 0;
    auto next_line = [&](const char* what) -> std::string_view {
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
        if (i >= lines.size()) throw ParseError(std::string("unexpected end of file, wanted ") + what, lines.size());
        return trim(lines[i++]);
    };

    if (lines.empty()) throw ParseError("no points", 0);
    if (next_line("ply magic") != "ply") throw ParseError("not a PLY file", 1);
    if (next_line("format") != "format ascii 1.0")
        throw ParseError("only `format ascii 1.0` is supported", i);

    long vertex_count = -1;
    std::vector<std::string> props;  // property names in declared order
    bool in_vertex_element = false;
    while (true) {
        const std::size_t line_no = i + 1;
        auto line = next_line("header");
        if (line == "end_header") break;
        auto tok = split(line, ' ');
        // split(' ') keeps empty tokens for repeated spaces; drop them
        std::erase_if(tok, [](std::string_view t) { return t.empty(); });
        if (tok.empty()) continue;
        if (tok[0] == "comment") continue;
        if (tok[0] == "element") {
            if (tok.size() != 3 || tok[1] != "vertex")
                throw ParseError("only a single `element vertex` is supported", line_no);
            if (vertex_count >= 0) throw ParseError("duplicate vertex element", line_no);
            if (!parse_int(tok[2], vertex_count) || vertex_count < 0)
                throw ParseError("bad vertex count", line_no);
            in_vertex_element = true;
        } else if (tok[0] == "property") {
            if (!in_vertex_element) throw ParseError("property outside vertex element", line_no);
            if (tok.size() != 3) throw ParseError("malformed property", line_no);
            const std::string_view type = tok[1];
            const std::string_view name = tok[2];
            if (name == "x" || name == "y" || name == "z") {
                if (type != "float" && type != "double" && type != "float32" && type != "float64")
                    throw ParseError("coordinate property must be float or double", line_no);
            } else if (name == "ring") {
                if (type != "int" && type != "int32" && type != "uint" && type != "uint32" &&
                    type != "uint16" && type != "uint8")
                    throw ParseError("ring property must be an integer type", line_no);
            } else {
                throw ParseError("unsupported property `" + std::string(name) + "`", line_no);
            }
            props.push_back(std::string(name));
        } else {
            throw ParseError("unsupported header line", line_no);
        }
    }

    if (vertex_count < 0) throw ParseError("missing `element vertex`", i);
    const bool want_ring =
        std::find(props.begin(), props.end(), "ring") != props.end();
    for (const char* required : {"x", "y", "z"}) {
        if (std::find(props.begin(), props.end(), required) == props.end())
            throw ParseError(std::string("missing property ") + required, i);
    }

    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(vertex_count));
    for (long v = 0; v < vertex_count; ++v) {
        const std::size_t line_no = i + 1;
        auto line = next_line("vertex row");
        auto tok = split(line, ' ');
        std::erase_if(tok, [](std::string_view t) { return t.empty(); });
        if (tok.size() != props.size())
            throw ParseError("expected " + std::to_string(props.size()) + " values", line_no);
        Point3 p;
        int ring = 0;
        for (std::size_t c = 0; c < props.size(); ++c) {
            if (props[c] == "ring") {
                long r;
                if (!parse_int(tok[c], r) || r < 0) throw ParseError("bad ring value", line_no);
                ring = static_cast<int>(r);
            } else {
                double val;
                if (!parse_double(tok[c], val) || !std::isfinite(val))
                    throw ParseError("bad coordinate value", line_no);
                if (props[c] == "x")
                    p.x = val;
                else if (props[c] == "y")
                    p.y = val;
                else
                    p.z = val;
            }
        }
        cloud.points.push_back(p);
        if (want_ring) cloud.ring.push_back(ring);
    }
    if (cloud.points.empty()) throw ParseError("no points", 0);
    return cloud;
}

std::string write_cloud_csv(const PointCloud& cloud) {
    std::string out;
    const bool ring = cloud.has_ring();
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Point3& p = cloud.points[i];
        out += format_double(p.x);
        out += ',';
        out += format_double(p.y);
        out += ',';
        out += format_double(p.z);
        if (ring) {
            out += ',';
            out += std::to_string(cloud.ring[i]);
        }
        out += '\n';
    }
    return out;
}

std::string write_cloud_ply(const PointCloud& cloud) {
    std::string out = "ply\nformat ascii 1.0\nelement vertex " +
                      std::to_string(cloud.points.size()) +
                      "\nproperty double x\nproperty double y\nproperty double z\n";
    const bool ring = cloud.has_ring();
    if (ring) out += "property int ring\n";
    out += "end_header\n";
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Point3& p = cloud.points[i];
        out += format_double(p.x);
        out += ' ';
        out += format_double(p.y);
        out += ' ';
        out += format_double(p.z);
        if (ring) {
            out += ' ';
            out += std::to_string(cloud.ring[i]);
        }
        out += '\n';
    }
    return out;
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    const std::string text = read_file(path);
    PointCloud cloud =
        format == CloudFormat::csv ? parse_cloud_csv(text) : parse_cloud_ply(text);
    cloud.validate();
    return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path) {
    return load_cloud(path, format_from_path(path));
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
    cloud.validate();
    write_file(path, format == CloudFormat::csv ? write_cloud_csv(cloud) : write_cloud_ply(cloud));
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    save_cloud(cloud, path, format_from_path(path));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir / "clouds", ec);
    if (ec) throw IoError("cannot create " + (dir / "clouds").string());

    json manifest;
    manifest["class_names"] = ds.class_names;
    manifest["metadata"] = ds.metadata;
    json items = json::array();
    char name[64];
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        std::snprintf(name, sizeof(name), "clouds/item_%05zu.csv", i);
        save_cloud(ds.items[i].cloud, dir / name, CloudFormat::csv);
        items.push_back({{"path", std::string(name)}, {"label", ds.items[i].label}});
    }
    manifest["items"] = std::move(items);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw IoError("no manifest.json in " + dir.string());
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what(), 0);
    }

    Dataset ds;
    try {
        ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
        if (manifest.contains("metadata"))
            ds.metadata = manifest["metadata"].get<std::map<std::string, std::string>>();
        for (const auto& item : manifest.at("items")) {
            LabeledCloud lc;
            lc.label = item.at("label").get<int>();
            lc.cloud = load_cloud(dir / item.at("path").get<std::string>());
            ds.items.push_back(std::move(lc));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what(), 0);
    }
    ds.validate();
    return ds;
}

}  // namespace ascn
