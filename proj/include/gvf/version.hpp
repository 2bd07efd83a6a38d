#ifndef GVF_VERSION_HPP
#define GVF_VERSION_HPP

namespace gvf {

inline constexpr const char* kProjectName = "gvfilter";
inline constexpr const char* kProjectVersion = "0.1.0";

// Bumped whenever the on-disk table format changes.
inline constexpr unsigned kTableFormatVersion = 1;

}  // namespace gvf

#endif
