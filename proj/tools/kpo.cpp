#include "kpo/cli/app.hpp"

int main(int argc, char** argv) { return kpo::cli::run(argc, argv, std::cout, std::cerr); }
