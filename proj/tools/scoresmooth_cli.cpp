#include "scoresmooth/harness.hpp"

int main(int argc, char** argv) { return scoresmooth::cli_main(argc, argv); }
