#include "wns/cli.hpp"

int main(int argc, char** argv) { return wns::cli::run(argc, argv); }
