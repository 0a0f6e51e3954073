#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace hoopnet {

/// Writes through a sibling temp file, then renames it over path, so readers
/// never observe a half-written file. Throws IoError on failure.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer,
                           bool binary = false);

}  // namespace hoopnet
