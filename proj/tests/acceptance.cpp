// Acceptance suite: runs every validation criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero on any failure.

#include <cstring>
#include <cstdlib>
#include <iostream>

#include "vmopt/validate.hpp"

int main(int argc, char** argv) {
    vmopt::ValidationOptions opts;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--skip-abm") == 0) {
            opts.skip_abm = true;
        } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
            opts.seed = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::cerr << "usage: acceptance [--skip-abm] [--seed N]\n";
            return 2;
        }
    }
    auto results = vmopt::run_validation(opts);
    vmopt::print_validation(std::cout, results);
    return vmopt::all_pass(results) ? 0 : 1;
}
