#pragma once

#include <string>
#include <vector>

namespace afmvc {

// Exit codes: 0 success, 2 usage/config, 3 training failure, 4 bound-lab
// domain error. `args` excludes the program name. Flag values override
// config-file values, which override defaults; AFMVC_OUT sets the default
// output directory.
int run_cli(const std::vector<std::string>& args);

}  // namespace afmvc
