#include "specklerc/cli.hpp"

int main(int argc, char** argv)
{
    return specklerc::cli::run(argc, argv);
}
