#ifndef GSCALEI_ERRORS_HPP_
#define GSCALEI_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gscalei {

/// Base class for all library errors; `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SingularQuadraticForm : Error {
  explicit SingularQuadraticForm(const std::string& msg)
      : Error("SingularQuadraticForm", msg) {}
};

struct DomainViolation : Error {
  explicit DomainViolation(const std::string& msg) : Error("DomainViolation", msg) {}
};

struct RankDeficientJacobian : Error {
  explicit RankDeficientJacobian(const std::string& msg)
      : Error("RankDeficientJacobian", msg) {}
};

struct RankDeficientEncoder : Error {
  explicit RankDeficientEncoder(const std::string& msg)
      : Error("RankDeficientEncoder", msg) {}
};

struct RankCollapse : Error {
  explicit RankCollapse(const std::string& msg) : Error("RankCollapse", msg) {}
};

struct NoPerfectMatching : Error {
  explicit NoPerfectMatching(const std::string& msg) : Error("NoPerfectMatching", msg) {}
};

struct BudgetExceeded : Error {
  explicit BudgetExceeded(const std::string& msg) : Error("BudgetExceeded", msg) {}
};

struct InvalidGraph : Error {
  explicit InvalidGraph(const std::string& msg) : Error("InvalidGraph", msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("IoError", msg) {}
};

}  // namespace gscalei

#endif  // GSCALEI_ERRORS_HPP_
