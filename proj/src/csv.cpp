#include "mdopf/csv.hpp"

#include <fmt/format.h>

#include "mdopf/errors.hpp"

namespace mdopf::csv {

std::string fixed(double value, int decimals) {
    std::string s = fmt::format("{:.{}f}", value, decimals);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

Writer::Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

Writer::~Writer() {
    if (out_.is_open()) out_.close();
}

void Writer::row(std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
        if (!first) out_ << ',';
        out_ << f;
        first = false;
    }
    out_ << '\n';
    if (!out_) throw IoError("write to '" + path_ + "' failed");
}

void Writer::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
    if (!out_) throw IoError("write to '" + path_ + "' failed");
}

void Writer::close() {
    out_.close();
    if (out_.fail()) throw IoError("closing '" + path_ + "' failed");
}

} // namespace mdopf::csv
