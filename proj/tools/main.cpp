#include "cli.hpp"

int main(int argc, char** argv)
{
    return rotalign::cli::cli_main(argc, argv);
}
