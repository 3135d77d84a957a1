#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcause {

// Base of every error thrown by the library. Input-validation failures use
// InvalidInput; identification refusals derive from IdentificationRefusal so
// front ends can map them to a distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class UnknownVariable : public InvalidInput {
 public:
  explicit UnknownVariable(const std::string& name)
      : InvalidInput("unknown variable '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// Conditioning on an event of probability zero.
class ZeroProbabilityEvidence : public Error {
 public:
  using Error::Error;
};

// compose_joint produced a product that does not normalize.
class InconsistentFactors : public Error {
 public:
  using Error::Error;
};

class NoConfounding : public Error {
 public:
  using Error::Error;
};

class DagViolation : public Error {
 public:
  using Error::Error;
};

class ZeroLikelihoodRow : public Error {
 public:
  using Error::Error;
};

class InfeasibleMargins : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class IdentificationRefusal : public Error {
 public:
  using Error::Error;
};

// Positivity failure. `strata` lists the offending conditioning cells, each as
// a vector of levels in the order documented by the throwing function.
class OverlapViolation : public IdentificationRefusal {
 public:
  OverlapViolation(const std::string& what, std::vector<std::vector<int>> strata)
      : IdentificationRefusal(what), strata_(std::move(strata)) {}
  const std::vector<std::vector<int>>& strata() const { return strata_; }

 private:
  std::vector<std::vector<int>> strata_;
};

class ZhatMismatch : public IdentificationRefusal {
 public:
  ZhatMismatch(int zhat_a, int zhat_a_prime)
      : IdentificationRefusal("zhat(a) = " + std::to_string(zhat_a) +
                              " differs from zhat(a') = " +
                              std::to_string(zhat_a_prime) +
                              "; counterfactual is not identified"),
        zhat_a_(zhat_a),
        zhat_a_prime_(zhat_a_prime) {}
  int zhat_a() const { return zhat_a_; }
  int zhat_a_prime() const { return zhat_a_prime_; }

 private:
  int zhat_a_;
  int zhat_a_prime_;
};

}  // namespace mcause
