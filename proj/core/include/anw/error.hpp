#pragma once

#include <stdexcept>
#include <string>

namespace anw {

// Thrown when a file does not match its declared format. `field` names the
// header field or region that failed (e.g. "magic", "num_classes", "pixels");
// offsets are embedded in the message where they are meaningful.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Thrown when a numerical procedure cannot produce a result (e.g. every
// gradient-search trajectory diverged).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anw
