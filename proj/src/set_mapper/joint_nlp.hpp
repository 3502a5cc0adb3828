#pragma once

#include <vector>

#include "mce/set_mapper.hpp"

namespace mce::detail {

// A certified member: free coefficients plus one certificate rule per cell.
struct CertifiedPoint {
  std::vector<double> theta;
  std::vector<std::vector<double>> certificates;
};

// Pushes each endpoint of `res` further along +/- direction with a
// sequential LP over (theta, sigma, V) jointly. Starts from the given
// certified endpoints (and the anchor when opts.nlp_starts > 1); only
// certified iterates replace an endpoint, so the interval never shrinks.
void joint_nlp_extend(const IdentificationProblem& problem, const std::vector<double>& direction,
                      const CertifiedPoint& anchor, const CertifiedPoint ends[2], const ProjectionOptions& opts,
                      ProjectionResult& res);

}  // namespace mce::detail
