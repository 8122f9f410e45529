#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ssmreduce {

/// Shortest round-trip-safe decimal form with 17 significant digits.
std::string fmt17(double v);

/// Row-oriented CSV writer with a fixed header.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row();
    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(int v);
    CsvWriter& operator<<(const std::string& v);
    CsvWriter& operator<<(const char* v) { return *this << std::string(v); }
    CsvWriter& operator<<(bool v);

    std::string str() const;
    void save(const std::string& path) const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Reads a header-plus-rows CSV into strings.
std::vector<std::vector<std::string>> read_csv(const std::string& path, std::vector<std::string>* header = nullptr);

nlohmann::json read_json(const std::string& path);
void write_json(const nlohmann::json& j, const std::string& path);
void write_text(const std::string& text, const std::string& path);
/// Creates the directory tree; throws InputError when not writable.
void ensure_directory(const std::string& path);

struct PlotSpec {
    std::string file;
    std::string x;
    std::string y;
    std::string group;  // optional column used to split series
    std::string title;
};
/// Manifest naming suggested axes for each emitted CSV.
nlohmann::json plot_manifest(const std::vector<PlotSpec>& plots);

}  // namespace ssmreduce
