#include "readoutsim/io.hpp"

#include <array>
#include <cmath>

namespace rsim {

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header) : out_(out) {
    bool first = true;
    for (auto h : header) {
        write_field(h, first);
    }
    out_ << '\n';
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
    bool first = true;
    for (const auto& h : header) {
        write_field(h, first);
    }
    out_ << '\n';
}

}  // namespace rsim
