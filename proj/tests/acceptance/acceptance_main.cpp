// Runs the seven acceptance criteria at the desk profile and prints one
// line per criterion, followed by the tampered-target negative control.

#include <cstdlib>
#include <iostream>

#include "roughlv/experiments.hpp"

int main(int argc, char** argv) {
  roughlv::AcceptanceOptions opt;
  if (const char* s = std::getenv("ROUGHLV_SEED")) opt.seed = std::strtoull(s, nullptr, 10);
  if (const char* t = std::getenv("ROUGHLV_THREADS")) opt.threads = std::max(1, std::atoi(t));
  const bool quiet = argc > 1 && std::string(argv[1]) == "--quiet";

  const auto data = roughlv::collect_acceptance_data(opt, quiet ? nullptr : &std::cerr);
  const auto results = roughlv::evaluate_acceptance(data, opt);

  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.measured
              << " | target " << r.target << " | tol " << r.tolerance << '\n';
    ok = ok && r.pass;
  }

  auto tampered = opt;
  tampered.tampered_target = 0.9;
  const auto control = roughlv::evaluate_acceptance(data, tampered);
  const bool control_caught = !control.front().pass;
  std::cout << (control_caught ? "PASS" : "FAIL")
            << "  [control] tampered skew-ratio target 0.9 for H=0.1 is rejected\n";

  roughlv::write_acceptance_table(std::cout, results);
  return ok && control_caught ? EXIT_SUCCESS : EXIT_FAILURE;
}
