#pragma once

// Single-layer Bayesian network: conflict state, point-cloud cue and texture
// cue are the parents of one binary "opening" node. Inference is the plain
// 12-term marginalization.
//
// CPT file: 12 lines `cpt <conflicted|confirmed|unknown> <opening|other> <opening|other> <p>`.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lod3/rasters.hpp"

namespace lod3 {

enum class ConflictState { Conflicted = 0, Confirmed = 1, Unknown = 2 };
enum class CueState { Opening = 0, Other = 1 };

std::string_view to_string(ConflictState s);
std::string_view to_string(CueState s);

class Cpt {
 public:
  /// All entries unset.
  Cpt() { entries_.fill(std::nullopt); }

  static Cpt defaults();
  static Cpt uniform(double p);

  std::optional<double> get(ConflictState c, CueState pc, CueState tex) const { return entries_[index(c, pc, tex)]; }
  void set(ConflictState c, CueState pc, CueState tex, double p) { entries_[index(c, pc, tex)] = p; }

  /// Entry lookup for a validated table.
  double operator()(ConflictState c, CueState pc, CueState tex) const { return *entries_[index(c, pc, tex)]; }

  static constexpr int index(ConflictState c, CueState pc, CueState tex) {
    return static_cast<int>(c) * 4 + static_cast<int>(pc) * 2 + static_cast<int>(tex);
  }

 private:
  std::array<std::optional<double>, 12> entries_;
};

/// Human-readable findings; empty iff every combination is present and in [0, 1].
std::vector<std::string> validate_cpt(const Cpt& cpt);

/// Parses and validates; ParseError on syntax or duplicates, ValidationError
/// on missing or out-of-range entries.
Cpt parse_cpt(std::string_view content);
Cpt read_cpt(const std::string& path);
std::string format_cpt(const Cpt& cpt);

struct PixelEvidence {
  std::array<double, 3> conflict{0.0, 0.0, 1.0};  // conflicted, confirmed, unknown
  double pc_opening = 0.5;
  double tex_opening = 0.5;
};

double pixel_posterior(const PixelEvidence& ev, const Cpt& cpt);

/// Evidence of one pixel from the optional maps. A missing conflict map means
/// unknown; a missing cue map means 0.5.
PixelEvidence pixel_evidence(const FacadeRaster* conflict, const FacadeRaster* pointcloud, const FacadeRaster* texture,
                             int row, int col);

/// Per-pixel posterior (channel "opening") on the common frame of the given
/// maps; `frame` is used when all three are absent. FrameMismatch if the
/// present maps disagree.
FacadeRaster fuse_maps(const FacadeRaster* conflict, const FacadeRaster* pointcloud, const FacadeRaster* texture,
                       const Cpt& cpt, const FacadeFrame* frame = nullptr);

/// window vs door from the cue maps: argmax of pc + tex channel sums, ties to window.
OpeningLabel disambiguate_label(const FacadeRaster* pointcloud, const FacadeRaster* texture, int row, int col);

}  // namespace lod3
