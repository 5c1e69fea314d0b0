#include "cstte/app/commands.hpp"

int main(int argc, char** argv) { return cstte::app::run_cli(argc, argv); }
