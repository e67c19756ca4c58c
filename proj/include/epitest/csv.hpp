#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace epitest {

/// Plain CSV emission with a '#'-prefixed metadata header. Numeric cells are
/// printed with "%.12g" so identical runs produce identical bytes.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void comment(const std::string& text);
    void columns(const std::vector<std::string>& names);
    void row(std::span<const double> values);

private:
    std::FILE* f_;
};

} // namespace epitest
