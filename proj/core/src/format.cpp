#include "grpolab/format.hpp"

#include <charconv>
#include <stdexcept>

namespace grpolab {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) {
    throw std::runtime_error("format_double: conversion failed");
  }
  return std::string(buf, res.ptr);
}

}  // namespace grpolab
