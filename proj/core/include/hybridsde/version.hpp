#ifndef HYBRIDSDE_VERSION_HPP
#define HYBRIDSDE_VERSION_HPP

namespace hybridsde {

inline constexpr const char* kVersion = "hybridsde 0.1.0";

}  // namespace hybridsde

#endif
