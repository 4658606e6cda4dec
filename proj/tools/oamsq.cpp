#include <iostream>

#include "oamsq/cli.hpp"

int main(int argc, char** argv, char** envp) { return oamsq::cli::run(argc, argv, envp, std::cout, std::cerr); }
