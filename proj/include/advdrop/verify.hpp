#ifndef ADVDROP_VERIFY_HPP
#define ADVDROP_VERIFY_HPP

#include <string>
#include <vector>

namespace advdrop {

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string details;      // one human-readable line
  std::string report_json;  // full machine-readable report
};

// {mask-oracle, gradients, linreg, metrics-identities, determinism}.
std::vector<std::string> verify_suite_names();

// Runs one named property suite against independent oracles (exhaustive
// enumeration, central finite differences, algebraic identities, repeated
// runs). Unknown names are a configuration error.
SuiteResult run_verify_suite(const std::string& name);

}  // namespace advdrop

#endif
