#include "ssmreduce/io.hpp"

#include "ssmreduce/error.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ssmreduce {

std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

CsvWriter& CsvWriter::row() {
    rows_.emplace_back();
    return *this;
}

CsvWriter& CsvWriter::operator<<(double v) { return *this << fmt17(v); }
CsvWriter& CsvWriter::operator<<(int v) { return *this << std::to_string(v); }
CsvWriter& CsvWriter::operator<<(bool v) { return *this << std::string(v ? "1" : "0"); }

CsvWriter& CsvWriter::operator<<(const std::string& v) {
    if (rows_.empty()) rows_.emplace_back();
    if (rows_.back().size() >= header_.size()) throw InputError("csv: row has more fields than the header");
    rows_.back().push_back(v);
    return *this;
}

std::string CsvWriter::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) {
        if (r.size() != header_.size()) throw InputError("csv: incomplete row");
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

void CsvWriter::save(const std::string& path) const { write_text(str(), path); }

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::vector<std::string>* header) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) out.push_back(field);
        return out;
    };
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            if (header) *header = split(line);
            first = false;
            continue;
        }
        rows.push_back(split(line));
    }
    return rows;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": malformed JSON: " + e.what());
    }
}

void write_json(const nlohmann::json& j, const std::string& path) { write_text(j.dump(2) + "\n", path); }

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec || !std::filesystem::is_directory(path)) throw InputError("output directory not writable: " + path);
}

nlohmann::json plot_manifest(const std::vector<PlotSpec>& plots) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : plots) {
        nlohmann::json e{{"file", p.file}, {"x", p.x}, {"y", p.y}, {"title", p.title}};
        if (!p.group.empty()) e["group"] = p.group;
        arr.push_back(e);
    }
    return {{"plots", arr}};
}

}  // namespace ssmreduce
