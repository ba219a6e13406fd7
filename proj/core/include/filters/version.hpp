#pragma once

namespace filters {

inline constexpr const char* kLibraryVersion = "0.1.0";

} // namespace filters
