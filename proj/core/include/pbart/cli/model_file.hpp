#pragma once

#include <iosfwd>
#include <string>

#include "pbart/error.hpp"
#include "pbart/sampler/posterior_sample.hpp"

namespace pbart {

inline constexpr int kModelFormatVersion = 1;

/// Plain-text posterior file: a header (format version, m, d, N, numcut,
/// scaling, cutpoint grids), then N snapshots of sigma followed by m trees,
/// then an `end` line. Reals use shortest round-trip decimals.
void save_model(const std::string& path, const PosteriorSample& sample);
void write_model(std::ostream& out, const PosteriorSample& sample);

/// Throws ModelFileError with a distinct kind for a version mismatch, a
/// count mismatch and a truncated file.
PosteriorSample load_model(const std::string& path);
PosteriorSample read_model(std::istream& in);

class ModelFileError : public ParseError {
 public:
  enum class Kind { Version, Count, Truncated, Syntax };
  ModelFileError(Kind kind, const std::string& what, std::size_t line)
      : ParseError(what, line), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace pbart
