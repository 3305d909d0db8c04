from bran_sim.main import main

main()
