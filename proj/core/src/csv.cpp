#include "siglab/csv.hpp"

#include "siglab/errors.hpp"

#include <cstdio>
#include <filesystem>

namespace siglab {

void CsvWriter::open(const std::string& path, const std::vector<std::string>& header, bool append) {
    namespace fs = std::filesystem;
    bool exists = append && fs::exists(path) && fs::file_size(path) > 0;
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw ValidationError("cannot open CSV for writing: " + path);
    if (!exists) write_row(header);
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << quote(fields[i]);
    }
    out_ << '\n';
}

std::string CsvWriter::quote(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string CsvWriter::format_double(double v) {
    char buf[64];
    // %.17g round-trips doubles exactly; trims to the shortest fixed forms
    // for typical metric magnitudes via %g semantics.
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace siglab
