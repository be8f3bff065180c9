#include "qbnorm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return qbnorm::cli::run(argc, argv, std::cerr); }
