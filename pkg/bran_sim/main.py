from bran_sim.cli.commands import main

# Entry point of the `bran-sim` console script and of `python -m bran_sim`
if __name__ == "__main__":
    main()
