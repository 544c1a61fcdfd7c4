"""Walk the rotor example through every construction and print each object."""
from coiso.lagrange import cartan_data, euler_lagrange_system, synthesize_lagrangian, verify_theorem1
from coiso.lift import invariance_check, lift, recover_extended_hamiltonian
from coiso.models import rotor_example
from coiso.presys import default_connection, kernel_basis, validate
from coiso.thicken import thicken


def main():
    sys = rotor_example()
    print("chart      ", sys.chart)
    print("omega      ", sys.omega)
    print("H          ", sys.H)
    print("gamma      ", sys.gamma)
    print(validate(sys))

    K = kernel_basis(sys.omega)
    P = default_connection(sys.omega, K)
    print("kernel     ", [str(v) for v in K])
    print("connection ", [str(f) for f in P.forms])

    t = thicken(sys, P)
    print("theta_P    ", t.theta_P)
    print("omega~     ", t.omega_tilde)

    t = lift(t)
    print("gamma~     ", t.gamma_tilde)
    print(invariance_check(t))
    t = t.with_dynamics(H_tilde=recover_extended_hamiltonian(t))
    print("H~         ", t.H_tilde)

    lag = synthesize_lagrangian(t)
    cd = cartan_data(lag)
    print("L          ", lag.L)
    print("omega_L    ", cd.omega_L)
    print("E_L        ", cd.E_L)
    print(euler_lagrange_system(lag).pretty())
    print(verify_theorem1(t, lag, cd))


if __name__ == "__main__":
    main()
