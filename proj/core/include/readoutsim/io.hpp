#pragma once

#include <charconv>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace rsim {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Comma-separated output with a header row and LF line endings.
class CsvWriter {
   public:
    CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((write_field(fields, first)), ...);
        out_ << '\n';
    }

   private:
    template <typename T>
    void write_field(const T& value, bool& first) {
        if (!first) {
            out_ << ',';
        }
        first = false;
        if constexpr (std::is_same_v<T, bool>) {
            out_ << (value ? 1 : 0);
        } else if constexpr (std::is_floating_point_v<T>) {
            out_ << format_double(static_cast<double>(value));
        } else if constexpr (std::is_integral_v<T>) {
            out_ << value;
        } else {
            out_ << std::string_view(value);
        }
    }

    std::ostream& out_;
};

}  // namespace rsim
