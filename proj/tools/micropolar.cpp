#include "micropolar/cli_io.hpp"

int main(int argc, char** argv) { return micropolar::dispatch(argc, argv); }
