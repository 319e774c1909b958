#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace siglab {

/// Minimal RFC-4180 CSV writer: UTF-8, header row, CRLF-free (LF line ends),
/// quoting applied only when a field contains comma, quote or newline.
class CsvWriter {
public:
    CsvWriter() = default;

    /// Opens `path` and writes the header unless the file already ends with
    /// data (append mode keeps one header per file).
    void open(const std::string& path, const std::vector<std::string>& header, bool append = false);

    void write_row(const std::vector<std::string>& fields);
    void flush() { out_.flush(); }
    bool is_open() const { return out_.is_open(); }

    static std::string quote(const std::string& field);
    static std::string format_double(double v);

private:
    std::ofstream out_;
};

} // namespace siglab
