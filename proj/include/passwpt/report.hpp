#pragma once

#include <string>
#include <vector>

namespace passwpt {

// Per-solve trace. Vectors are indexed by outer iteration; entry 0 is the
// starting point where that makes sense.
struct SolveReport {
  std::vector<double> objective;   // true objective after each round
  std::vector<double> surrogate;   // surrogate value after each round
  std::vector<double> tightness;   // |surrogate - objective| right after the aux update
  std::vector<double> residual;    // Dinkelbach residual or relative change
  std::vector<double> kkt;         // worst subproblem KKT residual in the round
  std::vector<double> beta;        // Dinkelbach parameter
  std::vector<double> lambda0;
  std::vector<double> p0;          // two-user P_0; multi-user transmit power
  int iterations = 0;
  bool converged = false;
  bool feasible = true;
  double seconds = 0.0;
  std::string status = "ok";
};

}  // namespace passwpt
