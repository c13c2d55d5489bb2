#ifndef AFE_BUNDLE_HPP
#define AFE_BUNDLE_HPP

#include "afe/ensemble.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace afe {

/// Bundle layout: magic "AFE1", u16 version, then sections of
/// 4-byte tag + u64 payload length + payload. Integers and f64 values are
/// little-endian. Nothing time- or host-dependent is written, so equal
/// models give equal bytes.
inline constexpr std::uint16_t kBundleVersion = 1;

std::string serialize(const EnsembleModel& m);
/// Throws DataError on a bad magic, an unknown version or a truncated or
/// inconsistent payload.
EnsembleModel deserialize(std::string_view bytes);

void save_bundle(const EnsembleModel& m, const std::filesystem::path& path);
EnsembleModel load_bundle(const std::filesystem::path& path);

}  // namespace afe

#endif  // AFE_BUNDLE_HPP
