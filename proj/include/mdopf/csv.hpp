#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace mdopf::csv {

/// Fixed-point with `decimals` digits; never prints a negative zero.
std::string fixed(double value, int decimals = 9);

/// Line-oriented CSV file; throws IoError if it cannot be opened or written.
class Writer {
public:
    explicit Writer(const std::string& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void row(std::initializer_list<std::string_view> fields);
    void row(const std::vector<std::string>& fields);
    void close();

private:
    std::string path_;
    std::ofstream out_;
};

} // namespace mdopf::csv
