#pragma once

#include <string>

#include "gvf/filter_engine.hpp"

namespace gvf {

// Audit export: one row per stored value, columns j,i,l,k,value with value
// printed to 17 significant digits (round-trips a double exactly).
void save_table_csv(const TriangularKernelTable& table, const std::string& path);

// Round-trip format: magic "PHIT", then version, channels, steps, n_modes as
// little-endian 32-bit unsigned integers, then the packed triangular payload
// (channel-major, entry (i,l) at index i(i+1)/2+l, n_modes doubles each).
void save_table_binary(const TriangularKernelTable& table, const std::string& path);

// Rejects bad magic, unsupported version, nonsensical sizes, truncated or
// oversized payloads with std::runtime_error.
TriangularKernelTable load_table_binary(const std::string& path);

}  // namespace gvf
