#include "ddfv/format.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "ddfv/errors.hpp"

namespace ddfv {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw Error(ErrorKind::InvalidArgument, "format_double: conversion failed");
    return {buf, end};
}

double parse_double(std::string_view token) {
    token = trim(token);
    if (token == "inf" || token == "+inf") return HUGE_VAL;
    if (token == "-inf") return -HUGE_VAL;
    if (token == "nan") return std::nan("");
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw Error(ErrorKind::Parse, "not a number: '" + std::string(token) + "'");
    return value;
}

long long parse_integer(std::string_view token) {
    token = trim(token);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw Error(ErrorKind::Parse, "not an integer: '" + std::string(token) + "'");
    return value;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace ddfv
