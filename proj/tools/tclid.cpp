#include "tclid/cli/commands.hpp"

int main(int argc, char** argv)
{
    return tclid::cli::run_cli(argc, argv);
}
