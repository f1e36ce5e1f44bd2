// One line per acceptance criterion; nonzero exit if any criterion fails.
#include <cstdlib>
#include <iostream>

#include "acceptance.hpp"

int main(int argc, char** argv) {
  bnmf::acceptance::Options options;
  for (int i = 1; i < argc; ++i) options.only.emplace_back(argv[i]);
  if (const char* workers = std::getenv("BNMF_WORKERS")) options.workers = std::atoi(workers);
  const auto results = bnmf::acceptance::run(options, [](const bnmf::acceptance::CheckResult& r) {
    std::cout << bnmf::acceptance::format_line(r) << std::endl;
  });
  return bnmf::acceptance::all_passed(results) ? EXIT_SUCCESS : EXIT_FAILURE;
}
