#include "epitest/csv.hpp"

#include <stdexcept>

namespace epitest {

CsvWriter::CsvWriter(const std::string& path) : f_(std::fopen(path.c_str(), "wb")) {
    if (!f_)
        throw std::runtime_error("CsvWriter: cannot open " + path);
}

CsvWriter::~CsvWriter() {
    if (f_)
        std::fclose(f_);
}

void CsvWriter::comment(const std::string& text) { std::fprintf(f_, "# %s\n", text.c_str()); }

void CsvWriter::columns(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i)
        std::fprintf(f_, "%s%s", i ? "," : "", names[i].c_str());
    std::fputc('\n', f_);
}

void CsvWriter::row(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        std::fprintf(f_, "%s%.12g", i ? "," : "", values[i]);
    std::fputc('\n', f_);
}

} // namespace epitest
