from cellsim.cli import main

main()
