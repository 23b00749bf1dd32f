#pragma once

#include <stdexcept>
#include <string>

namespace fbmlab {

/// A space window is too narrow, misaligned, or was escaped by an iterate.
struct window_error : std::runtime_error {
    explicit window_error(const std::string& what) : std::runtime_error(what) {}
};

/// An adaptive scheme exhausted its widening budget without stabilizing.
struct divergence_error : std::runtime_error {
    explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fbmlab
