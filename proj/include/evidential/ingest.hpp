#ifndef EVIDENTIAL_INGEST_HPP
#define EVIDENTIAL_INGEST_HPP

// Pascal VOC annotation XML, class statistics, and the detection
// interchange formats used for offline evaluation.
//
// Delimited detections, one per line, '#' comments:
//
//     <image_id> <class_name> <score> <x_min> <y_min> <x_max> <y_max>
//
// Structured detections: a JSON array of
//     {"image_id": ..., "class_name": ..., "score": ..., "box": [x_min, y_min, x_max, y_max]}

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "evidential/config.hpp"
#include "evidential/error.hpp"
#include "evidential/metrics.hpp"
#include "evidential/text.hpp"

namespace evidential {

struct AnnotatedObject {
    std::string class_name;
    Box box;
    bool difficult = false;

    friend bool operator==(const AnnotatedObject&, const AnnotatedObject&) = default;
};

struct Annotation {
    std::string image_id;
    std::vector<AnnotatedObject> objects;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

namespace detail {

namespace pt = boost::property_tree;

inline const pt::ptree& require_child(const pt::ptree& node, const std::string& key, const std::string& path)
{
    auto it = node.find(key);
    if (it == node.not_found()) {
        throw Error(Errc::MissingField, "missing '" + path + "/" + key + "'");
    }
    return it->second;
}

inline double require_real(const pt::ptree& node, const std::string& key, const std::string& path)
{
    const auto& child = require_child(node, key, path);
    const auto value = text::parse_real(text::trim(child.data()));
    if (!value) {
        throw Error(Errc::MalformedXml, "'" + path + "/" + key + "' is not a number: '" + child.data() + "'");
    }
    return *value;
}

} // namespace detail

/// Reads one VOC annotation. The image id is the `filename` without its
/// extension; pixel coordinates are kept as reals; objects stay in
/// document order.
inline Annotation parse_voc_annotation(std::string_view xml)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw Error(Errc::MalformedXml, e.what());
    }
    const auto& root = detail::require_child(tree, "annotation", "");
    const std::string filename(text::trim(detail::require_child(root, "filename", "annotation").data()));
    if (filename.empty()) {
        throw Error(Errc::MissingField, "'annotation/filename' is empty");
    }

    Annotation ann;
    ann.image_id = std::filesystem::path(filename).stem().string();
    std::size_t index = 0;
    for (const auto& [key, node] : root) {
        if (key != "object") {
            continue;
        }
        ++index;
        const std::string path = "annotation/object[" + std::to_string(index) + "]";
        AnnotatedObject obj;
        obj.class_name = std::string(text::trim(detail::require_child(node, "name", path).data()));
        if (obj.class_name.empty()) {
            throw Error(Errc::MissingField, "'" + path + "/name' is empty");
        }
        const auto& bb = detail::require_child(node, "bndbox", path);
        const std::string bb_path = path + "/bndbox";
        obj.box = {detail::require_real(bb, "xmin", bb_path), detail::require_real(bb, "ymin", bb_path),
                   detail::require_real(bb, "xmax", bb_path), detail::require_real(bb, "ymax", bb_path)};
        if (!obj.box.valid()) {
            throw Error(Errc::InvalidBox, "'" + bb_path + "' needs xmin < xmax and ymin < ymax", index);
        }
        if (auto d = node.find("difficult"); d != node.not_found()) {
            obj.difficult = text::trim(d->second.data()) == "1";
        }
        ann.objects.push_back(std::move(obj));
    }
    return ann;
}

inline std::string serialize_voc_annotation(const Annotation& ann)
{
    using text::format_real;
    std::string out = "<annotation>\n";
    out += "\t<filename>" + ann.image_id + ".jpg</filename>\n";
    for (const auto& obj : ann.objects) {
        out += "\t<object>\n";
        out += "\t\t<name>" + obj.class_name + "</name>\n";
        out += std::string("\t\t<difficult>") + (obj.difficult ? "1" : "0") + "</difficult>\n";
        out += "\t\t<bndbox>\n";
        out += "\t\t\t<xmin>" + format_real(obj.box.x_min) + "</xmin>\n";
        out += "\t\t\t<ymin>" + format_real(obj.box.y_min) + "</ymin>\n";
        out += "\t\t\t<xmax>" + format_real(obj.box.x_max) + "</xmax>\n";
        out += "\t\t\t<ymax>" + format_real(obj.box.y_max) + "</ymax>\n";
        out += "\t\t</bndbox>\n";
        out += "\t</object>\n";
    }
    out += "</annotation>\n";
    return out;
}

/// Object instances per class name. `difficult` objects count unless
/// excluded.
inline std::map<std::string, std::size_t> class_instance_counts(const std::vector<Annotation>& annotations,
                                                                bool exclude_difficult = false)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& ann : annotations) {
        for (const auto& obj : ann.objects) {
            if (!(exclude_difficult && obj.difficult)) {
                ++counts[obj.class_name];
            }
        }
    }
    return counts;
}

/// Every `*.xml` file of a directory, in file-name order.
inline std::vector<Annotation> load_voc_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::directory_iterator it(dir, ec);
    if (ec) {
        throw Error(Errc::IoError, "cannot read directory '" + dir.string() + "': " + ec.message());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : it) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Annotation> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        try {
            out.push_back(parse_voc_annotation(read_file(f)));
        } catch (const Error& e) {
            throw Error(e.code(), f.filename().string() + ": " + e.what());
        }
    }
    return out;
}

/// Annotations of a standard VOC split: ids from ImageSets/Main/<split>.txt,
/// files from Annotations/<id>.xml under `root`.
inline std::vector<Annotation> load_voc_split(const std::filesystem::path& root, std::string_view split)
{
    const std::string ids = read_file(root / "ImageSets" / "Main" / (std::string(split) + ".txt"));
    std::vector<Annotation> out;
    for (auto line : text::split_lines(ids)) {
        const auto id = text::trim(line);
        if (!id.empty()) {
            out.push_back(parse_voc_annotation(read_file(root / "Annotations" / (std::string(id) + ".xml"))));
        }
    }
    return out;
}

//------------------------------------------------------------------------------
// Detection records
//------------------------------------------------------------------------------

struct DetectionRecord {
    std::string image_id;
    std::string class_name;
    double score = 0.0;
    Box box;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

enum class DetectionFormat { Delimited, Json };

namespace detail {

inline void check_record(const DetectionRecord& r, std::size_t where)
{
    if (!(r.score >= 0.0 && r.score <= 1.0)) {
        throw Error(Errc::RangeError, "record " + std::to_string(where) + ": score outside [0,1]", where);
    }
    if (!r.box.valid()) {
        throw Error(Errc::InvalidBox, "record " + std::to_string(where) + ": box needs min < max", where);
    }
}

inline std::vector<DetectionRecord> parse_delimited_detections(std::string_view content)
{
    std::vector<DetectionRecord> out;
    const auto lines = text::split_lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        const auto fields = text::split_ws(text::trim(text::strip_comment(lines[n])));
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 7) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 7 fields, got " +
                                              std::to_string(fields.size()),
                        line_no);
        }
        double v[5];
        for (int i = 0; i < 5; ++i) {
            const auto parsed = text::parse_real(fields[2 + i]);
            if (!parsed) {
                throw Error(Errc::ParseError,
                            "line " + std::to_string(line_no) + ": '" + std::string(fields[2 + i]) +
                                "' is not a number",
                            line_no);
            }
            v[i] = *parsed;
        }
        DetectionRecord r{std::string(fields[0]), std::string(fields[1]), v[0], Box{v[1], v[2], v[3], v[4]}};
        check_record(r, line_no);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<DetectionRecord> parse_json_detections(std::string_view content)
{
    std::vector<DetectionRecord> out;
    if (text::trim(content).empty()) {
        return out;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, e.what());
    }
    if (!j.is_array()) {
        throw Error(Errc::ParseError, "detection file must hold a JSON array");
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        DetectionRecord r;
        try {
            const auto& e = j[i];
            r.image_id = e.at("image_id").get<std::string>();
            r.class_name = e.at("class_name").get<std::string>();
            r.score = e.at("score").get<double>();
            const auto& b = e.at("box");
            if (!b.is_array() || b.size() != 4) {
                throw Error(Errc::ParseError, "record " + std::to_string(i) + ": box needs 4 numbers", i);
            }
            r.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ParseError, "record " + std::to_string(i) + ": " + e.what(), i);
        }
        check_record(r, i);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace detail

inline std::vector<DetectionRecord> load_detections(std::string_view content,
                                                    DetectionFormat format = DetectionFormat::Delimited)
{
    return format == DetectionFormat::Delimited ? detail::parse_delimited_detections(content)
                                                : detail::parse_json_detections(content);
}

inline std::string serialize_detections(const std::vector<DetectionRecord>& records,
                                        DetectionFormat format = DetectionFormat::Delimited)
{
    using text::format_real;
    if (format == DetectionFormat::Json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& r : records) {
            j.push_back({{"image_id", r.image_id},
                         {"class_name", r.class_name},
                         {"score", r.score},
                         {"box", {r.box.x_min, r.box.y_min, r.box.x_max, r.box.y_max}}});
        }
        return j.dump(2) + "\n";
    }
    std::string out;
    for (const auto& r : records) {
        out += r.image_id + " " + r.class_name + " " + format_real(r.score) + " " + format_real(r.box.x_min) + " " +
               format_real(r.box.y_min) + " " + format_real(r.box.x_max) + " " + format_real(r.box.y_max) + "\n";
    }
    return out;
}

} // namespace evidential

#endif // EVIDENTIAL_INGEST_HPP
