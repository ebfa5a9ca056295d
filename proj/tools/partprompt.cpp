#include "partprompt/cli.hpp"

int main(int argc, char** argv) { return partprompt::cli_main(argc, argv); }
