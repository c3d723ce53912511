#include "hil/cli.hpp"

int main(int argc, char** argv)
{
    return hil::cli::run(argc, argv);
}
