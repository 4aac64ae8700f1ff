#pragma once

#include <string>
#include <string_view>

namespace consultrl::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool istarts_with(std::string_view s, std::string_view prefix) noexcept;

// Fixed-precision decimal rendering ("%.{digits}f"); locale independent.
std::string fixed(double value, int digits);

}  // namespace consultrl::text
