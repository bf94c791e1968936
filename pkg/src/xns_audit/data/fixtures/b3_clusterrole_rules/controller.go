package controllers

import (
	"context"

	rbacv1 "k8s.io/api/rbac/v1"
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// TenantReconciler maintains a reader ClusterRole per tenant label.
type TenantReconciler struct {
	client.Client
}

// Reconcile creates a ClusterRole whose rules are keyed by the tenant label.
func (r *TenantReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	tenant := &Tenant{}
	if err := r.Get(ctx, req.NamespacedName, tenant); err != nil {
		return ctrl.Result{}, err
	}

	label := tenant.Labels["tenant"]
	rules := []rbacv1.PolicyRule{{
		APIGroups:     []string{""},
		Resources:     []string{"secrets"},
		ResourceNames: []string{label + "-credentials"},
		Verbs:         []string{"get", "list"},
	}}
	role := &rbacv1.ClusterRole{
		ObjectMeta: metav1.ObjectMeta{Name: "tenant-reader"},
		Rules:      rules,
	}
	if err := r.Create(ctx, role); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
