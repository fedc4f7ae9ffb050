#include "sfe/cli.h"

int main(int argc, char** argv) { return sfe::cli::Run(argc, argv); }
