#include "norcal/cli.hpp"

int main(int argc, char** argv) { return norcal::cli::run(argc, argv); }
